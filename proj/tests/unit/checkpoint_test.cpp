#include <gtest/gtest.h>

#include <cstring>
#include <sstream>

#include "fame/checkpoint.hpp"
#include "fame/errors.hpp"
#include "fame/random.hpp"
#include "test_support.hpp"

using namespace fame;
using namespace fame::manifold;

namespace {

ModelCheckpoint sample_checkpoint() {
  ModelConfig mc;
  mc.input_dim = 5;
  mc.latent_dim = 3;
  mc.topic_dim = 2;
  mc.hidden_width = 4;
  mc.hidden_layers = 2;
  mc.num_topics = 2;
  mc.time.d_time = 6;
  mc.time.t_min = 19000.5;
  mc.time.t_max = 19700.25;
  ModelCheckpoint c;
  c.model = ManifoldModel::initialize(mc, 42);
  c.model.params().set_step(17);
  Rng rng(1);
  for (auto& [name, p] : c.model.params().entries()) {
    p.first_moment = Matrix::Zero(p.value.rows(), p.value.cols());
    p.second_moment = Matrix::Zero(p.value.rows(), p.value.cols());
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      p.first_moment.data()[i] = rng.normal() * 1e-7;
      p.second_moment.data()[i] = rng.uniform() / 3.0;
    }
  }
  c.train_config.learning_rate = 3e-4;
  c.train_config.weights = {0.2, 0.3, 0.5};
  c.train_config.seed = 99;
  c.topics.k = 2;
  c.topics.seed = 5;
  c.topics.iterations = 7;
  c.topics.centroids = Matrix::Random(2, 5);
  c.topics.assignments = {0, 1, 1};
  c.trace = {{1, 1.0 / 3, 0.1, 0.2, 0.3}, {2, 0.5, 0.25, 0.125, 1e-300}};
  c.rng_state = "12345 678";
  c.weight_min = 0.1;
  c.weight_max = 7.7;
  return c;
}

bool same_bits(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace

TEST(Checkpoint, RoundTripIsBitExact) {
  const auto c = sample_checkpoint();
  const auto bytes = serialize_checkpoint(c);
  ASSERT_EQ(bytes.substr(0, 8), "FAMECKPT");
  const auto d = deserialize_checkpoint(bytes);
  EXPECT_EQ(serialize_checkpoint(d), bytes);
  for (const auto& [name, p] : c.model.params().entries()) {
    const auto& q = d.model.params().at(name);
    EXPECT_TRUE(same_bits(p.value, q.value)) << name;
    EXPECT_TRUE(same_bits(p.first_moment, q.first_moment)) << name;
    EXPECT_TRUE(same_bits(p.second_moment, q.second_moment)) << name;
  }
  EXPECT_EQ(d.model.params().step(), 17);
  EXPECT_EQ(d.model.config().time.t_min, 19000.5);
  EXPECT_EQ(d.model.config().hidden_layers, 2);
  EXPECT_EQ(d.train_config.learning_rate, 3e-4);
  EXPECT_EQ(d.train_config.weights.gamma, 0.5);
  EXPECT_EQ(d.train_config.seed, 99u);
  EXPECT_TRUE(same_bits(d.topics.centroids, c.topics.centroids));
  EXPECT_EQ(d.topics.assignments, c.topics.assignments);
  ASSERT_EQ(d.trace.size(), 2u);
  EXPECT_EQ(d.trace[0].total, 1.0 / 3);
  EXPECT_EQ(d.trace[1].vanguard, 1e-300);
  EXPECT_EQ(d.rng_state, "12345 678");
  EXPECT_EQ(d.weight_max, 7.7);
}

TEST(Checkpoint, ScoresIdenticallyAfterReload) {
  const auto c = sample_checkpoint();
  const auto d = deserialize_checkpoint(serialize_checkpoint(c));
  const std::vector<double> x{0.1, -0.2, 0.3, 0.4, -0.5};
  const auto a = c.model.map_paper(x, 19300.0);
  const auto b = d.model.map_paper(x, 19300.0);
  EXPECT_TRUE(same_bits(a, b));
}

TEST(Checkpoint, FileRoundTrip) {
  fame::testing::TempDir dir("ckpt");
  const auto c = sample_checkpoint();
  save_checkpoint(dir / "m.ckpt", c);
  EXPECT_EQ(serialize_checkpoint(load_checkpoint(dir / "m.ckpt")), serialize_checkpoint(c));
  EXPECT_THROW(load_checkpoint(dir / "absent.ckpt"), DataError);
}

TEST(Checkpoint, RejectsCorruptInput) {
  const auto bytes = serialize_checkpoint(sample_checkpoint());
  EXPECT_THROW(deserialize_checkpoint("NOTACKPT"), DataError);
  EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, bytes.size() - 8)), DataError);
  EXPECT_THROW(deserialize_checkpoint(bytes + "x"), DataError);
  auto wrong_version = bytes;
  wrong_version[8] = 9;
  EXPECT_THROW(deserialize_checkpoint(wrong_version), DataError);
  EXPECT_THROW(deserialize_checkpoint(bytes.substr(0, 5)), DataError);
}

TEST(LossTrace, CsvLayout) {
  std::ostringstream out;
  write_loss_trace(out, {{1, 2.5, 1, 0.5, 1}});
  std::string header, line;
  std::istringstream in(out.str());
  std::getline(in, header);
  std::getline(in, line);
  EXPECT_EQ(header, "epoch,total,spine,inspire,vanguard");
  EXPECT_EQ(line.substr(0, 6), "1,2.5,");
}
