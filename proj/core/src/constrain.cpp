#include "llmad/constrain.hpp"

#include <algorithm>
#include <bitset>
#include <map>
#include <memory>
#include <queue>

namespace llmad::constrain {

namespace {

using ByteSet = std::bitset<256>;

constexpr int kUnbounded = -1;
constexpr int kMaxRepeat = 1000;

struct Node {
  enum class Kind { kEmpty, kBytes, kConcat, kAlt, kRepeat };
  Kind kind = Kind::kEmpty;
  ByteSet bytes;
  std::vector<std::unique_ptr<Node>> children;
  int min = 0;
  int max = 0;
};

using NodePtr = std::unique_ptr<Node>;

NodePtr make(Node::Kind kind) {
  auto n = std::make_unique<Node>();
  n->kind = kind;
  return n;
}

ByteSet range(unsigned char lo, unsigned char hi) {
  ByteSet s;
  for (int c = lo; c <= hi; ++c) s.set(static_cast<std::size_t>(c));
  return s;
}

ByteSet digit_set() { return range('0', '9'); }
ByteSet word_set() {
  return range('0', '9') | range('a', 'z') | range('A', 'Z') | range('_', '_');
}
ByteSet space_set() {
  ByteSet s = range('\t', '\r');
  s.set(' ');
  return s;
}

// Recursive-descent parser producing the syntax tree.
class RegexParser {
 public:
  explicit RegexParser(std::string_view src) : src_(src) {}

  NodePtr parse() {
    NodePtr root = parse_alt();
    if (pos_ != src_.size()) fail("unbalanced ')'");
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError("invalid pattern at offset " + std::to_string(pos_) +
                     ": " + what);
  }
  bool at_end() const { return pos_ >= src_.size(); }
  char peek() const { return src_[pos_]; }

  NodePtr parse_alt() {
    std::vector<NodePtr> branches;
    branches.push_back(parse_concat());
    while (!at_end() && peek() == '|') {
      ++pos_;
      branches.push_back(parse_concat());
    }
    if (branches.size() == 1) return std::move(branches.front());
    auto alt = make(Node::Kind::kAlt);
    alt->children = std::move(branches);
    return alt;
  }

  NodePtr parse_concat() {
    auto concat = make(Node::Kind::kConcat);
    while (!at_end() && peek() != '|' && peek() != ')') {
      concat->children.push_back(parse_repeat());
    }
    if (concat->children.empty()) return make(Node::Kind::kEmpty);
    if (concat->children.size() == 1) return std::move(concat->children.front());
    return concat;
  }

  NodePtr parse_repeat() {
    NodePtr atom = parse_atom();
    while (!at_end()) {
      int lo = 0;
      int hi = 0;
      const char c = peek();
      if (c == '*') {
        lo = 0, hi = kUnbounded, ++pos_;
      } else if (c == '+') {
        lo = 1, hi = kUnbounded, ++pos_;
      } else if (c == '?') {
        lo = 0, hi = 1, ++pos_;
      } else if (c == '{') {
        parse_braces(lo, hi);
      } else {
        break;
      }
      auto rep = make(Node::Kind::kRepeat);
      rep->min = lo;
      rep->max = hi;
      rep->children.push_back(std::move(atom));
      atom = std::move(rep);
    }
    return atom;
  }

  int parse_int() {
    const std::size_t start = pos_;
    long value = 0;
    while (!at_end() && peek() >= '0' && peek() <= '9') {
      value = value * 10 + (peek() - '0');
      if (value > kMaxRepeat) fail("repetition count too large");
      ++pos_;
    }
    if (pos_ == start) fail("expected a number in '{...}'");
    return static_cast<int>(value);
  }

  void parse_braces(int& lo, int& hi) {
    ++pos_;  // '{'
    lo = parse_int();
    hi = lo;
    if (!at_end() && peek() == ',') {
      ++pos_;
      hi = (!at_end() && peek() == '}') ? kUnbounded : parse_int();
    }
    if (at_end() || peek() != '}') fail("unterminated '{'");
    ++pos_;
    if (hi != kUnbounded && hi < lo) fail("bad repetition range");
  }

  NodePtr bytes_node(const ByteSet& s) {
    auto n = make(Node::Kind::kBytes);
    n->bytes = s;
    return n;
  }

  NodePtr parse_atom() {
    const char c = peek();
    switch (c) {
      case '(': {
        ++pos_;
        if (src_.substr(pos_, 2) == "?:") {
          pos_ += 2;
        } else if (!at_end() && peek() == '?') {
          fail("lookaround and other group extensions are not supported");
        }
        NodePtr inner = parse_alt();
        if (at_end() || peek() != ')') fail("missing ')'");
        ++pos_;
        return inner;
      }
      case '[':
        return bytes_node(parse_class());
      case '.': {
        ++pos_;
        ByteSet s;
        s.set();
        s.reset('\n');
        s.reset('\r');
        return bytes_node(s);
      }
      case '\\':
        ++pos_;
        return bytes_node(parse_escape());
      case '*':
      case '+':
      case '?':
      case '{':
        fail("quantifier without operand");
      case ')':
        fail("unbalanced ')'");
      case ']':
      case '}':
        fail(std::string("unescaped '") + c + "'");
      case '^':
      case '$':
        fail("anchors are implicit and not supported");
      default: {
        ++pos_;
        ByteSet s;
        s.set(static_cast<unsigned char>(c));
        return bytes_node(s);
      }
    }
  }

  int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    fail("bad hex digit");
  }

  // Called with pos_ just past the backslash.
  ByteSet parse_escape() {
    if (at_end()) fail("dangling '\\'");
    const char c = src_[pos_++];
    ByteSet s;
    switch (c) {
      case 'd': return digit_set();
      case 'D': return ~digit_set();
      case 'w': return word_set();
      case 'W': return ~word_set();
      case 's': return space_set();
      case 'S': return ~space_set();
      case 'n': s.set('\n'); return s;
      case 't': s.set('\t'); return s;
      case 'r': s.set('\r'); return s;
      case 'f': s.set('\f'); return s;
      case 'v': s.set('\v'); return s;
      case 'x': {
        if (pos_ + 2 > src_.size()) fail("truncated \\x escape");
        const int v = hex_digit(src_[pos_]) * 16 + hex_digit(src_[pos_ + 1]);
        pos_ += 2;
        s.set(static_cast<std::size_t>(v));
        return s;
      }
      default:
        if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
            (c >= '0' && c <= '9')) {
          fail(std::string("unsupported escape '\\") + c + "'");
        }
        s.set(static_cast<unsigned char>(c));
        return s;
    }
  }

  // Reads one class member: a byte, or an escape that may denote a set.
  ByteSet class_member(bool& single, unsigned char& byte) {
    if (peek() == '\\') {
      ++pos_;
      ByteSet s = parse_escape();
      single = s.count() == 1;
      if (single) {
        for (int b = 0; b < 256; ++b) {
          if (s.test(static_cast<std::size_t>(b))) byte = static_cast<unsigned char>(b);
        }
      }
      return s;
    }
    byte = static_cast<unsigned char>(src_[pos_++]);
    single = true;
    ByteSet s;
    s.set(byte);
    return s;
  }

  ByteSet parse_class() {
    ++pos_;  // '['
    bool negate = false;
    if (!at_end() && peek() == '^') {
      negate = true;
      ++pos_;
    }
    ByteSet set;
    bool first = true;
    while (true) {
      if (at_end()) fail("unterminated '['");
      if (peek() == ']' && !first) break;
      if (peek() == ']') fail("empty character class");
      first = false;
      bool single = false;
      unsigned char lo = 0;
      ByteSet member = class_member(single, lo);
      if (single && pos_ + 1 < src_.size() && peek() == '-' &&
          src_[pos_ + 1] != ']') {
        ++pos_;
        bool single_hi = false;
        unsigned char hi = 0;
        class_member(single_hi, hi);
        if (!single_hi || hi < lo) fail("bad class range");
        set |= range(lo, hi);
      } else {
        set |= member;
      }
    }
    ++pos_;  // ']'
    return negate ? ~set : set;
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

// Thompson NFA. A state has either one byte-set edge or epsilon edges.
struct Nfa {
  struct State {
    ByteSet on;
    int target = -1;
    std::vector<int> eps;
  };
  std::vector<State> states;

  int add() {
    states.emplace_back();
    return static_cast<int>(states.size()) - 1;
  }
};

struct Fragment {
  int start;
  int end;
};

Fragment build(Nfa& nfa, const Node& node);

Fragment build_repeat(Nfa& nfa, const Node& node) {
  const Node& body = *node.children.front();
  const int start = nfa.add();
  int cursor = start;
  for (int i = 0; i < node.min; ++i) {
    Fragment f = build(nfa, body);
    nfa.states[cursor].eps.push_back(f.start);
    cursor = f.end;
  }
  const int end = nfa.add();
  if (node.max == kUnbounded) {
    Fragment f = build(nfa, body);
    nfa.states[cursor].eps.push_back(f.start);
    nfa.states[cursor].eps.push_back(end);
    nfa.states[f.end].eps.push_back(f.start);
    nfa.states[f.end].eps.push_back(end);
  } else {
    for (int i = node.min; i < node.max; ++i) {
      Fragment f = build(nfa, body);
      nfa.states[cursor].eps.push_back(f.start);
      nfa.states[cursor].eps.push_back(end);
      cursor = f.end;
    }
    nfa.states[cursor].eps.push_back(end);
  }
  return {start, end};
}

Fragment build(Nfa& nfa, const Node& node) {
  switch (node.kind) {
    case Node::Kind::kEmpty: {
      const int s = nfa.add();
      return {s, s};
    }
    case Node::Kind::kBytes: {
      const int s = nfa.add();
      const int e = nfa.add();
      nfa.states[s].on = node.bytes;
      nfa.states[s].target = e;
      return {s, e};
    }
    case Node::Kind::kConcat: {
      Fragment whole = build(nfa, *node.children.front());
      for (std::size_t i = 1; i < node.children.size(); ++i) {
        Fragment f = build(nfa, *node.children[i]);
        nfa.states[whole.end].eps.push_back(f.start);
        whole.end = f.end;
      }
      return whole;
    }
    case Node::Kind::kAlt: {
      const int s = nfa.add();
      const int e = nfa.add();
      for (const auto& child : node.children) {
        Fragment f = build(nfa, *child);
        nfa.states[s].eps.push_back(f.start);
        nfa.states[f.end].eps.push_back(e);
      }
      return {s, e};
    }
    case Node::Kind::kRepeat:
      return build_repeat(nfa, node);
  }
  return {-1, -1};
}

std::vector<int> closure(const Nfa& nfa, std::vector<int> seeds) {
  std::vector<bool> seen(nfa.states.size(), false);
  std::vector<int> stack = seeds;
  std::vector<int> out;
  for (int s : seeds) seen[s] = true;
  while (!stack.empty()) {
    const int s = stack.back();
    stack.pop_back();
    out.push_back(s);
    for (int t : nfa.states[s].eps) {
      if (!seen[t]) {
        seen[t] = true;
        stack.push_back(t);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

PatternAutomaton PatternAutomaton::compile(std::string_view pattern) {
  NodePtr root = RegexParser(pattern).parse();
  Nfa nfa;
  const Fragment whole = build(nfa, *root);

  // Subset construction.
  std::map<std::vector<int>, StateId> ids;
  std::vector<std::vector<int>> sets;
  std::vector<std::array<StateId, 256>> trans;
  std::vector<bool> accept;
  auto intern = [&](std::vector<int> set) {
    auto [it, inserted] = ids.emplace(set, static_cast<StateId>(sets.size()));
    if (inserted) {
      accept.push_back(std::binary_search(set.begin(), set.end(), whole.end));
      sets.push_back(std::move(set));
      std::array<StateId, 256> row;
      row.fill(kNoState);
      trans.push_back(row);
    }
    return it->second;
  };
  intern(closure(nfa, {whole.start}));
  for (std::size_t d = 0; d < sets.size(); ++d) {
    for (int c = 0; c < 256; ++c) {
      std::vector<int> moved;
      for (int s : sets[d]) {
        const auto& st = nfa.states[s];
        if (st.target >= 0 && st.on.test(static_cast<std::size_t>(c))) {
          moved.push_back(st.target);
        }
      }
      if (moved.empty()) continue;
      const StateId next = intern(closure(nfa, std::move(moved)));
      trans[d][c] = next;
    }
  }

  // Drop states that cannot reach acceptance.
  const std::size_t n = sets.size();
  std::vector<bool> live(accept.begin(), accept.end());
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t s = 0; s < n; ++s) {
      if (live[s]) continue;
      for (StateId t : trans[s]) {
        if (t != kNoState && live[t]) {
          live[s] = true;
          changed = true;
          break;
        }
      }
    }
  }
  for (auto& row : trans) {
    for (auto& t : row) {
      if (t != kNoState && !live[t]) t = kNoState;
    }
  }

  // Moore partition refinement over live states; class -1 is the dead sink.
  std::vector<int> cls(n, -1);
  bool has_accept = false;
  bool has_reject = false;
  for (std::size_t s = 0; s < n; ++s) {
    if (!live[s]) continue;
    cls[s] = accept[s] ? 1 : 0;
    (accept[s] ? has_accept : has_reject) = true;
  }
  std::size_t num_classes = (has_accept ? 1 : 0) + (has_reject ? 1 : 0);
  for (;;) {
    std::map<std::vector<int>, int> signatures;
    std::vector<int> next_cls(n, -1);
    for (std::size_t s = 0; s < n; ++s) {
      if (!live[s]) continue;
      std::vector<int> sig;
      sig.reserve(257);
      sig.push_back(cls[s]);
      for (StateId t : trans[s]) sig.push_back(t == kNoState ? -1 : cls[t]);
      auto [it, _] = signatures.emplace(std::move(sig),
                                        static_cast<int>(signatures.size()));
      next_cls[s] = it->second;
    }
    cls = std::move(next_cls);
    if (signatures.size() == num_classes) break;
    num_classes = signatures.size();
  }

  PatternAutomaton out;
  out.source_ = std::string(pattern);
  if (!live[0]) {
    // Empty language: a lone rejecting start state.
    std::array<StateId, 256> row;
    row.fill(kNoState);
    out.transitions_.push_back(row);
    out.accepting_.push_back(false);
    return out;
  }

  // Renumber classes in BFS order from the start state.
  std::vector<StateId> order(n + 1, kNoState);
  std::vector<std::size_t> representative;
  std::queue<std::size_t> queue;
  auto visit = [&](std::size_t s) {
    const int c = cls[s];
    if (order[c] == kNoState) {
      order[c] = static_cast<StateId>(representative.size());
      representative.push_back(s);
      queue.push(s);
    }
  };
  visit(0);
  while (!queue.empty()) {
    const std::size_t s = queue.front();
    queue.pop();
    for (StateId t : trans[s]) {
      if (t != kNoState) visit(static_cast<std::size_t>(t));
    }
  }
  for (std::size_t rep : representative) {
    std::array<StateId, 256> row;
    for (int c = 0; c < 256; ++c) {
      const StateId t = trans[rep][c];
      row[c] = t == kNoState ? kNoState : order[cls[t]];
    }
    out.transitions_.push_back(row);
    out.accepting_.push_back(accept[rep]);
  }
  return out;
}

std::size_t PatternAutomaton::check(StateId s) const {
  if (s < 0 || static_cast<std::size_t>(s) >= accepting_.size()) {
    throw InvalidArgument("unknown automaton state " + std::to_string(s));
  }
  return static_cast<std::size_t>(s);
}

bool PatternAutomaton::has_outgoing(StateId s) const {
  const auto& row = transitions_[check(s)];
  return std::any_of(row.begin(), row.end(),
                     [](StateId t) { return t != kNoState; });
}

bool PatternAutomaton::matches(std::string_view text) const {
  StateId s = start();
  for (char c : text) {
    s = transitions_[static_cast<std::size_t>(s)][static_cast<unsigned char>(c)];
    if (s == kNoState) return false;
  }
  return accepting_[static_cast<std::size_t>(s)];
}

namespace {

struct TrieNode {
  std::vector<std::pair<unsigned char, std::size_t>> children;
  std::vector<TokenId> tokens;
};

}  // namespace

TokenMaskIndex::TokenMaskIndex(PatternAutomaton automaton,
                               std::vector<std::string> vocabulary)
    : automaton_(std::move(automaton)), vocabulary_(std::move(vocabulary)) {
  if (vocabulary_.empty()) throw InvalidArgument("empty vocabulary");

  std::vector<TrieNode> trie(1);
  for (std::size_t t = 0; t < vocabulary_.size(); ++t) {
    const std::string& token = vocabulary_[t];
    if (token.empty()) {
      throw InvalidArgument("vocabulary token " + std::to_string(t) +
                            " is empty");
    }
    std::size_t node = 0;
    for (char ch : token) {
      const auto c = static_cast<unsigned char>(ch);
      auto& kids = trie[node].children;
      auto it = std::find_if(kids.begin(), kids.end(),
                             [c](const auto& kv) { return kv.first == c; });
      if (it == kids.end()) {
        trie.emplace_back();
        trie[node].children.emplace_back(c, trie.size() - 1);
        node = trie.size() - 1;
      } else {
        node = it->second;
      }
    }
    trie[node].tokens.push_back(static_cast<TokenId>(t));
  }

  const std::size_t states = automaton_.num_states();
  const std::size_t vocab = vocabulary_.size();
  table_.assign(states * vocab, kNoState);
  std::vector<std::pair<std::size_t, StateId>> stack;
  for (std::size_t s = 0; s < states; ++s) {
    stack.assign(1, {0, static_cast<StateId>(s)});
    while (!stack.empty()) {
      auto [node, state] = stack.back();
      stack.pop_back();
      for (TokenId t : trie[node].tokens) table_[s * vocab + t] = state;
      for (auto [c, child] : trie[node].children) {
        const StateId next = automaton_.step(state, c);
        if (next != kNoState) stack.emplace_back(child, next);
      }
    }
  }
}

std::size_t TokenMaskIndex::row(StateId s) const {
  if (s < 0 || static_cast<std::size_t>(s) >= automaton_.num_states()) {
    throw InvalidArgument("unknown automaton state " + std::to_string(s));
  }
  return static_cast<std::size_t>(s) * vocabulary_.size();
}

StateId TokenMaskIndex::next(StateId s, TokenId t) const {
  if (t < 0 || static_cast<std::size_t>(t) >= vocabulary_.size()) {
    throw InvalidArgument("unknown token id " + std::to_string(t));
  }
  return table_[row(s) + static_cast<std::size_t>(t)];
}

std::vector<bool> TokenMaskIndex::allowed_tokens(StateId s) const {
  const std::size_t base = row(s);
  std::vector<bool> mask(vocabulary_.size());
  for (std::size_t t = 0; t < vocabulary_.size(); ++t) {
    mask[t] = table_[base + t] != kNoState;
  }
  return mask;
}

std::size_t TokenMaskIndex::count_allowed(StateId s) const {
  const std::size_t base = row(s);
  return static_cast<std::size_t>(
      std::count_if(table_.begin() + static_cast<std::ptrdiff_t>(base),
                    table_.begin() + static_cast<std::ptrdiff_t>(base + vocabulary_.size()),
                    [](StateId t) { return t != kNoState; }));
}

GenerationResult constrained_generate(const TokenMaskIndex& index,
                                      const Chooser& chooser, int max_tokens) {
  if (max_tokens < 1) throw InvalidArgument("max_tokens must be >= 1");
  const PatternAutomaton& dfa = index.automaton();
  GenerationResult result;
  StateId state = dfa.start();
  for (int step = 0; step < max_tokens; ++step) {
    const std::vector<bool> mask = index.allowed_tokens(state);
    const bool any = std::find(mask.begin(), mask.end(), true) != mask.end();
    if (!any) {
      if (dfa.is_accepting(state)) break;
      throw GenerationError(GenerationError::Kind::kStuck,
                            "no vocabulary token can extend the output at step " +
                                std::to_string(step + 1));
    }
    const std::optional<TokenId> choice = chooser(state, mask);
    if (!choice) {
      if (dfa.is_accepting(state)) break;
      throw GenerationError(GenerationError::Kind::kDeclinedEarly,
                            "chooser stopped before the output was complete");
    }
    if (*choice < 0 || static_cast<std::size_t>(*choice) >= mask.size() ||
        !mask[static_cast<std::size_t>(*choice)]) {
      throw GenerationError(GenerationError::Kind::kDisallowedToken,
                            "chooser returned disallowed token " +
                                std::to_string(*choice));
    }
    result.text += index.vocabulary()[static_cast<std::size_t>(*choice)];
    result.tokens.push_back(*choice);
    state = index.next(state, *choice);
  }
  result.final_state = state;
  result.accepted = dfa.is_accepting(state);
  return result;
}

}  // namespace llmad::constrain
