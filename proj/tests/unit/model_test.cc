// Copyright 2026 The RADE Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "rade/error.h"
#include "rade/model.h"
#include "rade/training.h"
#include "rade/vocabulary.h"

namespace rade {
namespace {

std::string Words(const std::string& stem, int n) {
  std::string out;
  for (int i = 0; i < n; ++i) out += (i ? " " : "") + stem + std::to_string(i);
  return out;
}

ModelConfig Tiny() {
  ModelConfig c;
  c.d_model = 16;
  c.n_heads = 2;
  c.n_encoder_layers = 1;
  c.n_decoder_layers = 1;
  c.ff_width = 32;
  c.max_length = 32;
  c.dropout = 0.0;
  return c;
}

RadeModel TinyModel(std::uint64_t seed = 1) {
  const std::vector<std::string> corpus = {"how are you today", "i am fine thanks",
                                           "not bad at all", "what about you"};
  return RadeModel(Tiny(), Vocabulary::Build(corpus, 1), seed);
}

TEST(VocabularyTest, BuildExamples) {
  const std::vector<std::string> corpus = {"a a b"};
  const Vocabulary v = Vocabulary::Build(corpus, 1);
  EXPECT_EQ(v.size(), 7);
  EXPECT_EQ(v.TokenOf(Vocabulary::kNumSpecials), "a");
  EXPECT_EQ(v.TokenOf(Vocabulary::kNumSpecials + 1), "b");
  const Vocabulary v2 = Vocabulary::Build(corpus, 2);
  EXPECT_EQ(v2.size(), 6);
  EXPECT_EQ(v2.IdOf("b"), Vocabulary::kUnk);
  EXPECT_TRUE(Vocabulary::Build(corpus, 1) == v);
  EXPECT_EQ(v.TokenOf(Vocabulary::kPad), "[PAD]");
  EXPECT_EQ(v.TokenOf(Vocabulary::kSep), "[SEP]");
}

TEST(VocabularyTest, FrequencyThenLexicographic) {
  const std::vector<std::string> corpus = {"c b a", "c b", "d"};
  const Vocabulary v = Vocabulary::Build(corpus, 1);
  const std::vector<std::string> expected = {"b", "c", "a", "d"};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    EXPECT_EQ(v.TokenOf(Vocabulary::kNumSpecials + static_cast<int>(i)), expected[i]);
  }
}

TEST(VocabularyTest, EncodeCountsUnknown) {
  const std::vector<std::string> corpus = {"x y"};
  const Vocabulary v = Vocabulary::Build(corpus, 1);
  std::size_t unknown = 0;
  const auto ids = v.Encode({"x", "zzz", "y", "qq"}, &unknown);
  EXPECT_EQ(unknown, 2u);
  EXPECT_EQ(ids[1], Vocabulary::kUnk);
}

TEST(VocabularyTest, EmptyCorpusIsAnError) {
  EXPECT_THROW(Vocabulary::Build(std::vector<std::string>{}, 1), Error);
}

TEST(ModelConfigTest, Validation) {
  ModelConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.n_heads = 3;
  EXPECT_THROW(c.Validate(), Error);
  c = ModelConfig();
  c.max_length = 7;
  EXPECT_THROW(c.Validate(), Error);
  EXPECT_EQ(ModelConfig::FromJson(ModelConfig().ToJson()), ModelConfig());
}

TEST(PosteriorInputTest, LengthArithmetic) {
  std::vector<std::string> corpus = {Words("c", 200), Words("r", 5), Words("a", 5)};
  ModelConfig config;
  const RadeModel model(config, Vocabulary::Build(corpus, 1), 1);
  const ExampleIds ids = model.Ids(Words("c", 10), Words("r", 5), Words("a", 5));
  const auto x = model.PosteriorInput(ids);
  EXPECT_EQ(x.size(), 22u);
  EXPECT_EQ(x[10], Vocabulary::kSep);
  EXPECT_EQ(x[16], Vocabulary::kSep);
}

TEST(PosteriorInputTest, TruncatesContextFromTheLeft) {
  std::vector<std::string> corpus = {Words("c", 200), Words("r", 5), Words("a", 5)};
  ModelConfig config;  // max_length 128
  const RadeModel model(config, Vocabulary::Build(corpus, 1), 1);
  const ExampleIds ids = model.Ids(Words("c", 200), Words("r", 5), Words("a", 5));
  const auto x = model.PosteriorInput(ids);
  ASSERT_EQ(x.size(), 128u);
  const std::size_t kept = 128 - 12;
  const std::vector<int> suffix(ids.context.end() - kept, ids.context.end());
  EXPECT_EQ(std::vector<int>(x.begin(), x.begin() + kept), suffix);
  EXPECT_EQ(std::vector<int>(x.begin() + kept + 1, x.begin() + kept + 6), ids.reference);
  EXPECT_EQ(std::vector<int>(x.end() - 5, x.end()), ids.candidate);
}

TEST(PosteriorInputTest, OversizedResponsesAreRejected) {
  RadeModel model = TinyModel();
  const ExampleIds ids = model.Ids("how", Words("r", 20), Words("a", 20));
  try {
    model.PosteriorInput(ids);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSequenceTooLong);
  }
}

TEST(EncodeTest, DeterministicAndOrderSensitive) {
  RadeModel model = TinyModel();
  const EncodedBatch a = model.EncodePosterior("how are you", "i am fine", "not bad");
  const EncodedBatch b = model.EncodePosterior("how are you", "i am fine", "not bad");
  EXPECT_EQ(a.hidden, b.hidden);
  EXPECT_EQ(a.hidden.rows(), static_cast<Eigen::Index>(a.tokens.size()));
  EXPECT_EQ(a.hidden.cols(), 16);
  const EncodedBatch swapped = model.EncodePosterior("how are you", "not bad", "i am fine");
  EXPECT_NE(a.hidden, swapped.hidden);
}

TEST(EncodeTest, RandomSwapsChangeHidden) {
  std::mt19937_64 rng(4);
  RadeModel model = TinyModel(9);
  const std::vector<std::string> words = {"how", "are", "you", "today", "fine", "thanks"};
  for (int t = 0; t < 20; ++t) {
    auto phrase = [&] {
      std::string s;
      for (int i = 0; i < 3; ++i) s += words[rng() % words.size()] + " ";
      return s;
    };
    const std::string r = phrase(), a = phrase();
    if (r == a) continue;
    EXPECT_NE(model.EncodePosterior("hi", r, a).hidden,
              model.EncodePosterior("hi", a, r).hidden);
  }
}

TEST(PoolTest, Examples) {
  EncodedBatch one;
  one.hidden = ad::Matrix::Constant(1, 3, 0.25);
  one.mask = {true};
  EXPECT_EQ(RadeModel::Pool(one), ad::RowVector::Constant(3, 0.25));

  EncodedBatch two;
  two.hidden.resize(2, 2);
  two.hidden << 1, 0, 0, 1;
  two.mask = {true, true};
  EXPECT_EQ(RadeModel::Pool(two), (ad::RowVector(2) << 0.5, 0.5).finished());
  two.mask = {true, false};
  EXPECT_EQ(RadeModel::Pool(two), (ad::RowVector(2) << 1, 0).finished());
  two.mask = {false, false};
  EXPECT_THROW(RadeModel::Pool(two), Error);
}

TEST(PredictScoresTest, ZeroHeadReturnsBiases) {
  RadeModel model = TinyModel();
  model.parameter("head.w1").value.setZero();
  model.parameter("head.w2").value.setZero();
  model.parameter("head.b2").value << 2.5, -1.0;
  const ScorePair s = model.PredictScores(ad::RowVector::Random(16));
  EXPECT_EQ(s.reference, 2.5);
  EXPECT_EQ(s.candidate, -1.0);
}

TEST(PredictScoresTest, JacobianMatchesFiniteDifferences) {
  RadeModel model = TinyModel(3);
  std::mt19937_64 rng(2);
  ad::RowVector h(16);
  for (int i = 0; i < 16; ++i) h(i) = std::uniform_real_distribution<double>(-1, 1)(rng);
  for (int out = 0; out < 2; ++out) {
    ad::Tape tape;
    const ad::Var in = tape.Input(h);
    tape.Backward(tape.Element(model.Head(tape, in), 0, out));
    const ad::Matrix analytic = tape.Grad(in);
    for (int i = 0; i < 16; ++i) {
      const double step = 1e-6;
      ad::RowVector up = h, down = h;
      up(i) += step;
      down(i) -= step;
      auto pick = [&](const ScorePair& s) { return out == 0 ? s.reference : s.candidate; };
      const double numeric =
          (pick(model.PredictScores(up)) - pick(model.PredictScores(down))) / (2 * step);
      const double denom = std::max(1e-6, std::abs(numeric) + std::abs(analytic(0, i)));
      EXPECT_LT(std::abs(numeric - analytic(0, i)) / denom, 1e-4);
    }
  }
}

TEST(PredictScoresTest, NonFiniteIsSignalled) {
  RadeModel model = TinyModel();
  model.parameter("head.b2").value(0, 0) = std::numeric_limits<double>::quiet_NaN();
  try {
    model.PredictScores(ad::RowVector::Zero(16));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonFinite);
  }
}

TEST(GenerationTest, StepwiseEqualsSinglePass) {
  RadeModel model = TinyModel(5);
  for (const char* ref : {"i am fine", "not bad at all thanks", "you"}) {
    const double single = model.GenerationLogProb("how are you today", ref);
    const double stepwise = model.GenerationLogProbStepwise("how are you today", ref);
    EXPECT_LE(single, 0.0);
    EXPECT_NEAR(single, stepwise, 1e-9);
  }
}

TEST(GenerationTest, UniformLogitsGiveLogV) {
  RadeModel model = TinyModel(5);
  model.parameters()[model.token_embedding()].value.setZero();
  const double v = model.vocab().size();
  const double lp = model.GenerationLogProb("how are you", "i am fine");  // T = 3
  EXPECT_NEAR(lp, -4.0 * std::log(v), 1e-9);
  RadeModel fresh = TinyModel(5);
  fresh.parameters()[fresh.token_embedding()].value.setZero();
  EXPECT_NEAR(training::LossGen(fresh, "how are you", "i am fine"), std::log(v), 1e-9);
}

TEST(GenerationTest, PerStepDistributionsNormalize) {
  RadeModel model = TinyModel(6);
  const ad::Matrix table = model.GenerationLogProbTable("how are you", "i am fine thanks");
  EXPECT_EQ(table.rows(), 5);
  EXPECT_EQ(table.cols(), model.vocab().size());
  for (int r = 0; r < table.rows(); ++r) {
    EXPECT_LT(std::abs(table.row(r).array().exp().sum() - 1.0), 1e-6);
  }
}

TEST(GenerationTest, UnknownTargetsAreCounted) {
  RadeModel model = TinyModel();
  std::size_t unknown = 0;
  const double lp = model.GenerationLogProb("how are you", "i am zebra quux", &unknown);
  EXPECT_EQ(unknown, 2u);
  EXPECT_LE(lp, 0.0);
}

TEST(GenerateTest, EmptyAndDeterministic) {
  RadeModel model = TinyModel(7);
  EXPECT_TRUE(model.Generate("how are you", 0).empty());
  EXPECT_EQ(model.Generate("how are you", 6), model.Generate("how are you", 6));
}

TEST(GenerateTest, OverfitOnePairReproducesReference) {
  RadeModel model = TinyModel(8);
  const std::string context = "how are you today";
  const std::string reference = "i am fine thanks";
  const ExampleIds ids = model.Ids(context, reference, "");
  training::AdamOptimizer adam(model.parameters(), 1e-2, 0.9, 0.98, 1e-8);
  for (int step = 0; step < 500; ++step) {
    model.ZeroGrad();
    ad::Tape tape;
    const ad::Var lp = model.ReferenceLogProbOnTape(tape, ids, {});
    tape.Backward(tape.Scale(lp, -1.0));
    adam.Step(model.parameters());
  }
  EXPECT_EQ(model.Generate(context, 10), Tokenize(reference));
}

TEST(EncoderSharingTest, OneParameterSet) {
  RadeModel model = TinyModel();
  EXPECT_EQ(&model.posterior_encoder(), &model.context_encoder());
  // Both paths send gradient into the same encoder parameters.
  const ExampleIds ids = model.Ids("how are you", "i am fine", "not bad");
  const int probe = model.posterior_encoder().layers[0].self_attention.wq;
  model.ZeroGrad();
  {
    ad::Tape tape;
    tape.Backward(tape.Element(model.ScoresOnTape(tape, ids, {}), 0, 1));
  }
  EXPECT_GT(model.parameter(probe).grad.norm(), 0.0);
  model.ZeroGrad();
  {
    ad::Tape tape;
    tape.Backward(model.ReferenceLogProbOnTape(tape, ids, {}));
  }
  EXPECT_GT(model.parameter(probe).grad.norm(), 0.0);
  std::set<std::string> names;
  for (const auto& p : model.parameters()) names.insert(p.name);
  EXPECT_EQ(names.size(), model.parameters().size());
  for (const auto& n : names) {
    EXPECT_EQ(n.find("context_encoder"), std::string::npos);
  }
}

TEST(InferenceTest, BitReproducible) {
  RadeModel a = TinyModel(11), b = TinyModel(11);
  const ScorePair sa = a.Score("how are you", "i am fine", "not bad");
  const ScorePair sb = b.Score("how are you", "i am fine", "not bad");
  EXPECT_EQ(sa.reference, sb.reference);
  EXPECT_EQ(sa.candidate, sb.candidate);
  EXPECT_TRUE(std::isfinite(sa.candidate));
}

}  // namespace
}  // namespace rade
