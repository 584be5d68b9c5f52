#include <gtest/gtest.h>

#include <functional>
#include <map>
#include <random>
#include <regex>
#include <set>

#include "llmad/constrain.hpp"
#include "llmad/parser.hpp"
#include "support/oracles.hpp"
#include "support/vocab.hpp"

namespace llmad::constrain {
namespace {

bool std_match(const std::string& pattern, const std::string& text) {
  return std::regex_match(text, std::regex(pattern, std::regex::ECMAScript));
}

TEST(CompilePattern, SingleLiteral) {
  const auto dfa = compile_pattern("a");
  EXPECT_TRUE(dfa.matches("a"));
  EXPECT_FALSE(dfa.matches("aa"));
  EXPECT_FALSE(dfa.matches(""));
  EXPECT_EQ(dfa.pattern_source(), "a");
}

TEST(CompilePattern, AnswerGrammar) {
  const auto dfa = compile_pattern(kAnswerPattern);
  EXPECT_TRUE(dfa.matches("Data 5, 10 are abnormal."));
  EXPECT_TRUE(dfa.matches("All data are normal."));
  EXPECT_FALSE(dfa.matches("Data are abnormal."));
  EXPECT_FALSE(std_match(std::string(kAnswerPattern), "Data are abnormal."));
  EXPECT_FALSE(dfa.matches("Data 5, 10 and 11 are abnormal."));
  EXPECT_FALSE(dfa.matches("All data are normal"));
}

TEST(CompilePattern, MalformedPatternsThrow) {
  for (const char* bad : {"(", "a)", "*a", "[", "a{2", "[]", "\\q", "a{3,1}",
                          "a|*", "(?=a)", "^a", "\\"}) {
    EXPECT_THROW(compile_pattern(bad), ParseError) << bad;
  }
}

TEST(CompilePattern, MinimisesStates) {
  EXPECT_EQ(compile_pattern("(ab|cb)").num_states(), 3u);
  EXPECT_EQ(compile_pattern("a*").num_states(), 1u);
}

TEST(CompilePattern, EmptyLanguage) {
  const auto dfa = compile_pattern("[^\\x00-\\xff]");
  EXPECT_EQ(dfa.num_states(), 1u);
  EXPECT_FALSE(dfa.matches(""));
  EXPECT_FALSE(dfa.has_outgoing(dfa.start()));
}

// Differential check against std::regex over random short strings.
TEST(CompilePattern, AgreesWithStdRegex) {
  const std::vector<std::string> patterns = {
      "(ab|b)*a?", "[a-c]{2,3}(x|yz)*", "(?:a|b)+c?", "[^ab]?c{1,}",
      "\\d+(\\.\\d\\d?)?", "(a|)(b|)", "a{0,2}b{2}", "[-a]b[a-]",
      "\\w\\s\\W", ".b", "(a*)*", "x|y|z|"};
  const std::string alphabet = "abcxyz.19 -_!\n";
  std::mt19937_64 gen(1);
  for (const auto& p : patterns) {
    const auto dfa = compile_pattern(p);
    const std::regex ref(p, std::regex::ECMAScript);
    for (int i = 0; i < 3000; ++i) {
      std::string s;
      const std::size_t len = gen() % 7;
      for (std::size_t k = 0; k < len; ++k) s += alphabet[gen() % alphabet.size()];
      ASSERT_EQ(dfa.matches(s), std::regex_match(s, ref)) << p << " on '" << s << "'";
    }
  }
}

TEST(IndexVocabulary, TwoLetterExample) {
  const auto index = index_vocabulary(compile_pattern("ab"), {"a", "b", "ab"});
  const StateId start = index.automaton().start();
  const StateId mid = index.next(start, 0);
  ASSERT_NE(mid, kNoState);
  EXPECT_FALSE(index.automaton().is_accepting(mid));
  EXPECT_EQ(index.next(start, 1), kNoState);
  const StateId end = index.next(start, 2);
  ASSERT_NE(end, kNoState);
  EXPECT_TRUE(index.automaton().is_accepting(end));
  EXPECT_EQ(index.next(mid, 1), end);
  EXPECT_EQ(index.next(mid, 0), kNoState);

  EXPECT_EQ(allowed_tokens(index, start), (std::vector<bool>{true, false, true}));
  EXPECT_EQ(allowed_tokens(index, end), (std::vector<bool>{false, false, false}));
  EXPECT_THROW(allowed_tokens(index, 99), InvalidArgument);
  EXPECT_THROW(allowed_tokens(index, -1), InvalidArgument);
}

TEST(IndexVocabulary, NoTokenFits) {
  const auto index = index_vocabulary(compile_pattern("a"), {"b"});
  for (StateId s = 0; s < static_cast<StateId>(index.automaton().num_states()); ++s) {
    EXPECT_EQ(index.count_allowed(s), 0u);
  }
}

TEST(IndexVocabulary, RejectsEmptyInput) {
  EXPECT_THROW(index_vocabulary(compile_pattern("a"), {}), InvalidArgument);
  EXPECT_THROW(index_vocabulary(compile_pattern("a"), {"a", ""}), InvalidArgument);
}

TEST(IndexVocabulary, MatchesCharacterSimulation) {
  const auto vocab = testing::toy_vocabulary_200();
  for (const auto& p : testing::soundness_patterns()) {
    const auto index = index_vocabulary(compile_pattern(p), vocab);
    const auto& dfa = index.automaton();
    for (StateId s = 0; s < static_cast<StateId>(dfa.num_states()); ++s) {
      for (TokenId t = 0; t < static_cast<TokenId>(vocab.size()); ++t) {
        ASSERT_EQ(index.next(s, t), testing::simulate_token(dfa, s, vocab[t]));
      }
    }
  }
}

std::vector<TokenId> tokens_of(const std::vector<std::string>& vocab,
                               const std::vector<std::string>& pieces) {
  std::vector<TokenId> ids;
  for (const auto& p : pieces) {
    ids.push_back(static_cast<TokenId>(
        std::find(vocab.begin(), vocab.end(), p) - vocab.begin()));
  }
  return ids;
}

Chooser replay(std::vector<TokenId> ids) {
  auto pos = std::make_shared<std::size_t>(0);
  return [ids = std::move(ids), pos](StateId, const std::vector<bool>&) -> std::optional<TokenId> {
    if (*pos >= ids.size()) return std::nullopt;
    return ids[(*pos)++];
  };
}

TEST(ConstrainedGenerate, PicksWholeToken) {
  const auto index = index_vocabulary(compile_pattern("ab"), {"a", "b", "ab"});
  const auto out = constrained_generate(index, replay({2}), 5);
  EXPECT_EQ(out.text, "ab");
  EXPECT_TRUE(out.accepted);
}

TEST(ConstrainedGenerate, ReplaysCleanBatchSentence) {
  const std::vector<std::string> vocab = {"All", " data", " are", " normal.",
                                          "Data ", "1", ", ", " are abnormal."};
  const auto index = index_vocabulary(compile_pattern(kAnswerPattern), vocab);
  const auto out = constrained_generate(
      index, replay(tokens_of(vocab, {"All", " data", " are", " normal."})), 10);
  EXPECT_EQ(out.text, "All data are normal.");
  EXPECT_TRUE(out.accepted);
}

TEST(ConstrainedGenerate, StuckWhenVocabularyCannotRealisePattern) {
  const auto index = index_vocabulary(compile_pattern("a+"), {"b"});
  try {
    constrained_generate(index, replay({0}), 3);
    FAIL() << "expected GenerationError";
  } catch (const GenerationError& e) {
    EXPECT_EQ(e.kind(), GenerationError::Kind::kStuck);
  }
}

TEST(ConstrainedGenerate, DisallowedAndEarlyStopErrors) {
  const auto index = index_vocabulary(compile_pattern("ab"), {"a", "b", "ab"});
  try {
    constrained_generate(index, replay({1}), 3);
    FAIL();
  } catch (const GenerationError& e) {
    EXPECT_EQ(e.kind(), GenerationError::Kind::kDisallowedToken);
  }
  try {
    constrained_generate(index, replay({0}), 3);
    FAIL();
  } catch (const GenerationError& e) {
    EXPECT_EQ(e.kind(), GenerationError::Kind::kDeclinedEarly);
  }
  EXPECT_THROW(constrained_generate(index, replay({}), 0), InvalidArgument);
}

TEST(ConstrainedGenerate, MaxTokensStopsPartialOutput) {
  const auto index = index_vocabulary(compile_pattern("a+b"), {"a", "b"});
  const auto out = constrained_generate(
      index, [](StateId, const std::vector<bool>&) { return TokenId{0}; }, 4);
  EXPECT_EQ(out.text, "aaaa");
  EXPECT_FALSE(out.accepted);
}

// Every accepted walk of at most six tokens matches the grammar, and every
// canonical answer with up to two single-digit indices is among them.
TEST(ConstrainedGenerate, WalksReproduceCanonicalAnswers) {
  std::vector<std::string> vocab = {"Data ", ", ", " are abnormal.",
                                    "All data are normal."};
  for (char c = '0'; c <= '9'; ++c) vocab.emplace_back(1, c);
  const auto index = index_vocabulary(compile_pattern(kAnswerPattern), vocab);
  const std::regex ref{std::string(kAnswerPattern)};

  std::set<std::string> accepted;
  std::function<void(StateId, std::string, int)> walk = [&](StateId s, std::string text, int depth) {
    if (index.automaton().is_accepting(s)) accepted.insert(text);
    if (depth == 6) return;
    for (TokenId t = 0; t < static_cast<TokenId>(vocab.size()); ++t) {
      const StateId n = index.next(s, t);
      if (n != kNoState) walk(n, text + vocab[t], depth + 1);
    }
  };
  walk(index.automaton().start(), "", 0);

  for (const auto& s : accepted) EXPECT_TRUE(std::regex_match(s, ref)) << s;
  EXPECT_TRUE(accepted.count("All data are normal."));
  for (std::int64_t a = 1; a <= 9; ++a) {
    const std::vector<std::int64_t> one = {a};
    EXPECT_TRUE(accepted.count(render_response(one, NamingScheme::kData)));
    for (std::int64_t b = a + 1; b <= 9; ++b) {
      const std::vector<std::int64_t> two = {a, b};
      EXPECT_TRUE(accepted.count(render_response(two, NamingScheme::kData)));
    }
  }
}

TEST(ConstrainedGenerate, RandomWalksAreSound) {
  const auto vocab = testing::toy_vocabulary_200();
  std::mt19937_64 gen(77);
  for (const auto& p : testing::soundness_patterns()) {
    const auto index = index_vocabulary(compile_pattern(p), vocab);
    const std::regex ref(p);
    int accepted = 0;
    for (int walk = 0; walk < 500; ++walk) {
      Chooser chooser = [&](StateId s, const std::vector<bool>& mask) -> std::optional<TokenId> {
        if (index.automaton().is_accepting(s) && gen() % 4 == 0) return std::nullopt;
        std::vector<TokenId> allowed;
        for (std::size_t t = 0; t < mask.size(); ++t) {
          if (mask[t]) allowed.push_back(static_cast<TokenId>(t));
        }
        return allowed[gen() % allowed.size()];
      };
      try {
        const auto out = constrained_generate(index, chooser, 40);
        if (out.accepted) {
          ++accepted;
          ASSERT_TRUE(std::regex_match(out.text, ref)) << p << ": " << out.text;
        }
      } catch (const GenerationError& e) {
        ASSERT_EQ(e.kind(), GenerationError::Kind::kStuck);
      }
    }
    EXPECT_GT(accepted, 100) << p;
  }
}

}  // namespace
}  // namespace llmad::constrain
