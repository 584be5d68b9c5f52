#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "llmad/error.hpp"

namespace llmad::constrain {

using StateId = std::int32_t;
using TokenId = std::int32_t;
inline constexpr StateId kNoState = -1;

/// Minimal deterministic automaton for an anchored regular expression.
///
/// Supported syntax: literals, '.' (any byte but \n and \r), escapes (\. \\ \d \D \w \W \s \S \n \t
/// \r \f \v \xHH and any escaped punctuation), bracket classes with ranges
/// and negation, grouping "(...)" and "(?:...)", alternation '|', and the
/// quantifiers * + ? {m} {m,} {m,n}. Matching is byte-wise and always covers
/// the whole input. Every state can reach an accepting state.
class PatternAutomaton {
 public:
  /// Throws ParseError on malformed or unsupported patterns.
  static PatternAutomaton compile(std::string_view pattern);

  StateId start() const { return 0; }
  std::size_t num_states() const { return accepting_.size(); }
  bool is_accepting(StateId s) const { return accepting_.at(check(s)); }
  /// Successor on byte `c`, or kNoState.
  StateId step(StateId s, unsigned char c) const {
    return transitions_[check(s)][c];
  }
  bool has_outgoing(StateId s) const;
  bool matches(std::string_view text) const;
  const std::string& pattern_source() const { return source_; }

 private:
  PatternAutomaton() = default;
  std::size_t check(StateId s) const;

  std::string source_;
  std::vector<std::array<StateId, 256>> transitions_;
  std::vector<bool> accepting_;
};

inline PatternAutomaton compile_pattern(std::string_view pattern) {
  return PatternAutomaton::compile(pattern);
}

/// Precomputed state x token transition table over a caller vocabulary.
///
/// next(s, t) is the state reached by feeding every byte of token t from s,
/// or kNoState if some byte has no transition.
class TokenMaskIndex {
 public:
  /// Throws InvalidArgument for an empty vocabulary or an empty token.
  TokenMaskIndex(PatternAutomaton automaton, std::vector<std::string> vocabulary);

  const PatternAutomaton& automaton() const { return automaton_; }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }
  std::size_t vocab_size() const { return vocabulary_.size(); }

  StateId next(StateId s, TokenId t) const;
  /// mask[t] is true iff next(s, t) is defined. Throws InvalidArgument for an
  /// unknown state.
  std::vector<bool> allowed_tokens(StateId s) const;
  std::size_t count_allowed(StateId s) const;

 private:
  std::size_t row(StateId s) const;

  PatternAutomaton automaton_;
  std::vector<std::string> vocabulary_;
  std::vector<StateId> table_;  // num_states x vocab_size, row-major
};

inline TokenMaskIndex index_vocabulary(PatternAutomaton automaton,
                                       std::vector<std::string> vocabulary) {
  return TokenMaskIndex(std::move(automaton), std::move(vocabulary));
}

inline std::vector<bool> allowed_tokens(const TokenMaskIndex& index,
                                        StateId state) {
  return index.allowed_tokens(state);
}

/// Picks the next token given the current state and its allowed-token mask.
/// Returning nullopt ends generation (only legal in an accepting state).
using Chooser =
    std::function<std::optional<TokenId>(StateId, const std::vector<bool>&)>;

struct GenerationResult {
  std::string text;
  std::vector<TokenId> tokens;
  StateId final_state = kNoState;
  /// The walk ended in an accepting state, so `text` matches the pattern.
  bool accepted = false;
};

/// Raised when constrained generation cannot continue.
class GenerationError : public Error {
 public:
  enum class Kind { kStuck, kDisallowedToken, kDeclinedEarly };
  GenerationError(Kind kind, const std::string& what)
      : Error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

/// Runs the chooser under the automaton's token masks for at most
/// `max_tokens` steps. Stops early when the chooser declines in an accepting
/// state or an accepting state has no allowed continuation.
GenerationResult constrained_generate(const TokenMaskIndex& index,
                                      const Chooser& chooser, int max_tokens);

}  // namespace llmad::constrain
