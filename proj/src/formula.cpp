#include "abcreg/formula.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "abcreg/errors.hpp"

namespace abcreg {

namespace {

struct Token {
  enum Type { Ident, One, Tilde, Plus, Colon, Star, LParen, RParen, End } type;
  std::string text;
  std::size_t pos;
};

std::vector<Token> lex(const std::string& s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '1') {
      out.push_back({Token::One, "1", i});
      ++i;
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_' ||
              s[j] == '.'))
        ++j;
      out.push_back({Token::Ident, s.substr(i, j - i), i});
      i = j;
      continue;
    }
    Token::Type t;
    switch (c) {
      case '~': t = Token::Tilde; break;
      case '+': t = Token::Plus; break;
      case ':': t = Token::Colon; break;
      case '*': t = Token::Star; break;
      case '(': t = Token::LParen; break;
      case ')': t = Token::RParen; break;
      default:
        throw FormulaError("unexpected character '" + std::string(1, c) +
                               "' at position " + std::to_string(i),
                           i);
    }
    out.push_back({t, std::string(1, c), i});
    ++i;
  }
  out.push_back({Token::End, "", s.size()});
  return out;
}

// Builds the term set while tracking whether each term was written
// explicitly or introduced by a `*` expansion; only explicit duplicates
// are errors.
struct TermAccumulator {
  std::vector<std::string> mains;
  std::vector<std::pair<std::string, std::string>> interactions;
  std::set<std::string> explicit_mains;
  std::set<std::pair<std::string, std::string>> explicit_inters;
  std::set<std::string> main_set;
  std::set<std::pair<std::string, std::string>> inter_set;
  std::string response;

  void check_var(const std::string& v, std::size_t pos) const {
    if (v == response)
      throw FormulaError("response '" + v + "' appears on the right-hand side",
                         pos);
  }

  void add_main(const std::string& v, bool expl, std::size_t pos) {
    check_var(v, pos);
    if (expl) {
      if (explicit_mains.count(v))
        throw FormulaError("duplicate term '" + v + "'", pos);
      explicit_mains.insert(v);
    }
    if (main_set.insert(v).second) mains.push_back(v);
  }

  void add_inter(const std::string& a, const std::string& b, bool expl,
                 std::size_t pos) {
    check_var(a, pos);
    check_var(b, pos);
    if (a == b)
      throw FormulaError("self-interaction '" + a + ":" + b + "'", pos);
    auto key = std::minmax(a, b);
    if (expl) {
      if (explicit_inters.count(key))
        throw FormulaError("duplicate term '" + a + ":" + b + "'", pos);
      explicit_inters.insert(key);
    }
    if (inter_set.insert(key).second) interactions.emplace_back(a, b);
  }
};

class Parser {
 public:
  explicit Parser(const std::string& text) : toks_(lex(text)) {}

  ModelSpec run() {
    ModelSpec spec;
    spec.response = expect_ident("response variable");
    expect(Token::Tilde, "'~'");
    acc_.response = spec.response;
    parse_term();
    while (peek().type == Token::Plus) {
      advance();
      parse_term();
    }
    expect(Token::End, "end of formula");
    spec.mains = acc_.mains;
    spec.interactions = acc_.interactions;
    return spec;
  }

 private:
  const Token& peek() const { return toks_[i_]; }
  const Token& advance() { return toks_[i_++]; }

  void expect(Token::Type t, const std::string& what) {
    if (peek().type != t)
      throw FormulaError("expected " + what + " at position " +
                             std::to_string(peek().pos),
                         peek().pos);
    advance();
  }

  std::string expect_ident(const std::string& what) {
    if (peek().type != Token::Ident)
      throw FormulaError("expected " + what + " at position " +
                             std::to_string(peek().pos),
                         peek().pos);
    return advance().text;
  }

  void parse_term() {
    if (peek().type == Token::One) {
      advance();  // explicit intercept; it is always present anyway
      return;
    }
    if (peek().type == Token::LParen) {
      std::size_t pos = peek().pos;
      advance();
      std::vector<std::string> group;
      group.push_back(expect_ident("variable"));
      while (peek().type == Token::Plus) {
        advance();
        group.push_back(expect_ident("variable"));
      }
      expect(Token::RParen, "')'");
      expect(Token::Star, "'*' after group");
      std::string rhs = expect_ident("variable");
      for (const auto& v : group) acc_.add_main(v, true, pos);
      acc_.add_main(rhs, false, pos);
      for (const auto& v : group) acc_.add_inter(v, rhs, false, pos);
      return;
    }
    std::size_t pos = peek().pos;
    std::string a = expect_ident("variable");
    if (peek().type == Token::Colon) {
      advance();
      std::string b = expect_ident("variable");
      acc_.add_inter(a, b, true, pos);
    } else if (peek().type == Token::Star) {
      advance();
      std::string b = expect_ident("variable");
      acc_.add_main(a, false, pos);
      acc_.add_main(b, false, pos);
      acc_.add_inter(a, b, false, pos);
    } else {
      acc_.add_main(a, true, pos);
    }
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
  TermAccumulator acc_;
};

}  // namespace

ModelSpec parse_formula(const std::string& text) { return Parser(text).run(); }

bool ModelSpec::has_variable(const std::string& name) const {
  if (std::find(mains.begin(), mains.end(), name) != mains.end()) return true;
  for (const auto& [a, b] : interactions)
    if (a == name || b == name) return true;
  return false;
}

std::string ModelSpec::render() const {
  std::ostringstream os;
  os << response << " ~ ";
  bool first = true;
  auto emit = [&](const std::string& t) {
    if (!first) os << " + ";
    os << t;
    first = false;
  };
  if (resolved) {
    for (const auto& v : continuous) emit(v);
    for (const auto& v : categorical) emit(v);
    for (const auto& [x, c] : cat_cont) emit(x + ":" + c);
    for (const auto& [a, b] : cat_cat) emit(a + ":" + b);
  } else {
    for (const auto& v : mains) emit(v);
    for (const auto& [a, b] : interactions) emit(a + ":" + b);
  }
  if (first) os << "1";  // intercept-only
  return os.str();
}

bool ModelSpec::nested_in(const ModelSpec& other) const {
  if (response != other.response) return false;
  auto contains = [](const std::vector<std::string>& v, const std::string& x) {
    return std::find(v.begin(), v.end(), x) != v.end();
  };
  for (const auto& v : continuous)
    if (!contains(other.continuous, v)) return false;
  for (const auto& v : categorical)
    if (!contains(other.categorical, v)) return false;
  auto pair_in = [](const std::vector<std::pair<std::string, std::string>>& v,
                    const std::pair<std::string, std::string>& p) {
    return std::find(v.begin(), v.end(), p) != v.end();
  };
  for (const auto& p : cat_cont)
    if (!pair_in(other.cat_cont, p)) return false;
  for (const auto& p : cat_cat)
    if (!pair_in(other.cat_cat, p)) return false;
  return true;
}

ModelSpec validate_spec(const ModelSpec& spec, const Schema& schema) {
  ModelSpec out;
  out.response = spec.response;
  out.mains = spec.mains;
  out.interactions = spec.interactions;

  auto kind_of = [&](const std::string& v) {
    auto it = schema.find(v);
    if (it == schema.end()) throw FormulaError("unknown variable '" + v + "'");
    return it->second;
  };

  auto resp = schema.find(spec.response);
  if (resp == schema.end())
    throw FormulaError("unknown variable '" + spec.response + "'");
  if (resp->second == ColumnKind::Categorical)
    throw FormulaError("response '" + spec.response + "' is categorical");

  std::set<std::string> cont, cats;
  for (const auto& v : spec.mains) {
    if (kind_of(v) == ColumnKind::Continuous)
      cont.insert(v);
    else
      cats.insert(v);
  }

  std::set<std::pair<std::string, std::string>> cc, kk;
  for (const auto& [a, b] : spec.interactions) {
    ColumnKind ka = kind_of(a), kb = kind_of(b);
    if (ka == ColumnKind::Continuous && kb == ColumnKind::Continuous)
      throw FormulaError("continuous:continuous interaction '" + a + ":" + b +
                         "' is not supported");
    // Hierarchy: interaction members must appear as mains.
    for (const auto& v : {a, b}) {
      bool is_cont = kind_of(v) == ColumnKind::Continuous;
      auto& bucket = is_cont ? cont : cats;
      if (!bucket.count(v)) {
        bucket.insert(v);
        out.warnings.push_back("added main term '" + v +
                               "' required by interaction '" + a + ":" + b +
                               "'");
      }
    }
    if (ka == ColumnKind::Categorical && kb == ColumnKind::Categorical) {
      kk.insert(std::minmax(a, b));
    } else {
      const std::string& x = (ka == ColumnKind::Continuous) ? a : b;
      const std::string& c = (ka == ColumnKind::Continuous) ? b : a;
      cc.insert({x, c});
    }
  }

  out.continuous.assign(cont.begin(), cont.end());
  out.categorical.assign(cats.begin(), cats.end());
  out.cat_cont.assign(cc.begin(), cc.end());
  out.cat_cat.assign(kk.begin(), kk.end());
  out.resolved = true;
  return out;
}

}  // namespace abcreg
