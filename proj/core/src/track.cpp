#include "dysonchain/track.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace dyson {

// ---------------------------------------------------------------------------
// expression AST
// ---------------------------------------------------------------------------

struct CoefficientTrack::Node {
  enum Kind { kConst, kTime, kAdd, kSub, kMul, kDiv, kNeg, kSin, kCos, kExp } kind;
  Complex value{};
  std::shared_ptr<const Node> lhs, rhs;

  Complex eval(double t) const {
    switch (kind) {
      case kConst: return value;
      case kTime: return Complex(t, 0.0);
      case kAdd: return lhs->eval(t) + rhs->eval(t);
      case kSub: return lhs->eval(t) - rhs->eval(t);
      case kMul: return lhs->eval(t) * rhs->eval(t);
      case kDiv: return lhs->eval(t) / rhs->eval(t);
      case kNeg: return -lhs->eval(t);
      case kSin: return std::sin(lhs->eval(t));
      case kCos: return std::cos(lhs->eval(t));
      case kExp: return std::exp(lhs->eval(t));
    }
    return {};
  }
};

namespace {

using NodePtr = std::shared_ptr<const CoefficientTrack::Node>;
using Node = CoefficientTrack::Node;

NodePtr make(Node::Kind k, NodePtr l = nullptr, NodePtr r = nullptr, Complex v = {}) {
  auto n = std::make_shared<Node>();
  n->kind = k;
  n->lhs = std::move(l);
  n->rhs = std::move(r);
  n->value = v;
  return n;
}

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodePtr parse() {
    NodePtr e = expr();
    skip_ws();
    if (pos_ != s_.size()) fail("trailing input");
    return e;
  }

 private:
  const std::string& s_;
  size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream os;
    os << "track parse error at position " << pos_ << ": " << what << " in \"" << s_ << "\"";
    throw std::invalid_argument(os.str());
  }
  void skip_ws() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  bool eat(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  char peek() {
    skip_ws();
    return pos_ < s_.size() ? s_[pos_] : '\0';
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (eat('+')) lhs = make(Node::kAdd, lhs, term());
      else if (eat('-')) lhs = make(Node::kSub, lhs, term());
      else return lhs;
    }
  }
  NodePtr term() {
    NodePtr lhs = factor();
    for (;;) {
      if (eat('*')) lhs = make(Node::kMul, lhs, factor());
      else if (eat('/')) lhs = make(Node::kDiv, lhs, factor());
      else return lhs;
    }
  }
  NodePtr factor() {
    if (eat('-')) return make(Node::kNeg, factor());
    if (eat('+')) return factor();
    return atom();
  }
  NodePtr atom() {
    skip_ws();
    if (eat('(')) {
      NodePtr e = expr();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    const char c = peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) return ident();
    fail("expected number, 't', 'i', function, or '('");
  }
  NodePtr number() {
    size_t start = pos_;
    while (pos_ < s_.size() &&
           (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.' ||
            s_[pos_] == 'e' || s_[pos_] == 'E' ||
            ((s_[pos_] == '+' || s_[pos_] == '-') && pos_ > start &&
             (s_[pos_ - 1] == 'e' || s_[pos_ - 1] == 'E')))) {
      ++pos_;
    }
    try {
      return make(Node::kConst, nullptr, nullptr, Complex(std::stod(s_.substr(start, pos_ - start)), 0.0));
    } catch (const std::exception&) {
      pos_ = start;
      fail("malformed number");
    }
  }
  NodePtr ident() {
    size_t start = pos_;
    while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    const std::string name = s_.substr(start, pos_ - start);
    if (name == "t") return make(Node::kTime);
    if (name == "i") return make(Node::kConst, nullptr, nullptr, kI);
    Node::Kind k;
    if (name == "sin") k = Node::kSin;
    else if (name == "cos") k = Node::kCos;
    else if (name == "exp") k = Node::kExp;
    else fail("unknown identifier '" + name + "'");
    if (!eat('(')) fail("expected '(' after function name");
    NodePtr arg = expr();
    if (!eat(')')) fail("expected ')'");
    return make(k, arg);
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// CoefficientTrack
// ---------------------------------------------------------------------------

CoefficientTrack::CoefficientTrack(const std::string& expression) : expr_(expression) {
  root_ = Parser(expression).parse();
}

CoefficientTrack::CoefficientTrack(double t0, double dt, std::vector<Complex> samples)
    : sampled_(true), t0_(t0), dt_(dt), samples_(std::move(samples)) {
  if (samples_.size() < 2) throw std::invalid_argument("sampled track needs >= 2 knots");
  if (dt_ <= 0) throw std::invalid_argument("sampled track needs dt > 0");
  build_spline();
}

void CoefficientTrack::build_spline() {
  // natural cubic spline second derivatives on the uniform grid (Thomas solve)
  const size_t n = samples_.size();
  spline_m_.assign(n, Complex(0, 0));
  if (n == 2) return;
  std::vector<Complex> rhs(n - 2);
  for (size_t k = 1; k + 1 < n; ++k) {
    rhs[k - 1] = 6.0 * (samples_[k + 1] - 2.0 * samples_[k] + samples_[k - 1]) / (dt_ * dt_);
  }
  std::vector<double> diag(n - 2, 4.0);
  // forward elimination, off-diagonals are 1
  for (size_t k = 1; k < n - 2; ++k) {
    const double w = 1.0 / diag[k - 1];
    diag[k] -= w;
    rhs[k] -= w * rhs[k - 1];
  }
  spline_m_[n - 2] = rhs[n - 3] / diag[n - 3];
  for (size_t k = n - 3; k >= 1; --k) {
    spline_m_[k] = (rhs[k - 1] - spline_m_[k + 1]) / diag[k - 1];
    if (k == 1) break;
  }
}

Complex CoefficientTrack::operator()(double t) const {
  if (!sampled_) return root_->eval(t);
  const size_t n = samples_.size();
  double x = (t - t0_) / dt_;
  long k = long(std::floor(x));
  if (k < 0) k = 0;
  if (k > long(n) - 2) k = long(n) - 2;
  const double u = x - double(k);  // in [0,1] inside the grid
  const Complex ya = samples_[k], yb = samples_[k + 1];
  const Complex ma = spline_m_[k], mb = spline_m_[k + 1];
  const double h = dt_;
  return ya * (1.0 - u) + yb * u +
         (h * h / 6.0) * (ma * ((1 - u) * (1 - u) * (1 - u) - (1 - u)) + mb * (u * u * u - u));
}

std::string CoefficientTrack::serialize() const {
  std::ostringstream os;
  os.precision(17);
  if (!sampled_) {
    os << "expr:" << expr_;
    return os.str();
  }
  os << "samples:" << t0_ << ":" << dt_;
  for (const Complex& c : samples_) os << ":" << c.real() << "," << c.imag();
  return os.str();
}

CoefficientTrack CoefficientTrack::deserialize(const std::string& text) {
  if (text.rfind("expr:", 0) == 0) return CoefficientTrack(text.substr(5));
  if (text.rfind("samples:", 0) == 0) {
    std::istringstream is(text.substr(8));
    std::string tok;
    std::getline(is, tok, ':');
    const double t0 = std::stod(tok);
    std::getline(is, tok, ':');
    const double dt = std::stod(tok);
    std::vector<Complex> samples;
    while (std::getline(is, tok, ':')) {
      const auto comma = tok.find(',');
      samples.emplace_back(std::stod(tok.substr(0, comma)), std::stod(tok.substr(comma + 1)));
    }
    return CoefficientTrack(t0, dt, std::move(samples));
  }
  throw std::invalid_argument("track deserialize: unknown prefix");
}

CoefficientTrack constant_track(Complex value) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << value.real() << ")";
  if (value.imag() != 0.0) os << "+(" << value.imag() << ")*i";
  return CoefficientTrack(os.str());
}

}  // namespace dyson
