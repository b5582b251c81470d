#include "ealoc/hmm_io.hpp"

#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace ealoc {
namespace {

// Reads whitespace-separated tokens, skipping '#' comments, without consuming
// anything past the last requested token.
class Tokens {
 public:
  explicit Tokens(std::istream& is) : is_(is) {}
  template <typename T>
  T next(const char* what) {
    for (;;) {
      is_ >> std::ws;
      if (is_.peek() != '#') break;
      is_.ignore(std::numeric_limits<std::streamsize>::max(), '\n');
    }
    T value{};
    if (!(is_ >> value)) throw std::runtime_error(std::string("hmm file: expected ") + what);
    return value;
  }

 private:
  std::istream& is_;
};

template <typename Derived>
void write_rows(std::ostream& os, const Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? " " : "") << m(i, j);
    os << '\n';
  }
}

}  // namespace

void write_hmm(std::ostream& os, const HmmParamsd& params) {
  const auto old_precision = os.precision(std::numeric_limits<double>::max_digits10);
  os << params.n_states() << ' ' << params.n_aps() << '\n';
  write_rows(os, params.prior.transpose());
  write_rows(os, params.trans);
  write_rows(os, params.mu);
  write_rows(os, params.sigma);
  os.precision(old_precision);
}

HmmParamsd read_hmm(std::istream& is) {
  Tokens tok(is);
  const long T = tok.next<long>("state count T");
  const long M = tok.next<long>("AP count M");
  if (T < 1 || M < 1) throw std::runtime_error("hmm file: T and M must be positive");
  HmmParamsd p;
  p.prior.resize(T);
  p.trans.resize(T, T);
  p.mu.resize(T, M);
  p.sigma.resize(T, M);
  for (long i = 0; i < T; ++i) p.prior(i) = tok.next<double>("prior value");
  for (long i = 0; i < T; ++i)
    for (long j = 0; j < T; ++j) p.trans(i, j) = tok.next<double>("transition value");
  for (long i = 0; i < T; ++i)
    for (long k = 0; k < M; ++k) p.mu(i, k) = tok.next<double>("mu value");
  for (long i = 0; i < T; ++i)
    for (long k = 0; k < M; ++k) p.sigma(i, k) = tok.next<double>("sigma value");
  p.validate();
  return p;
}

void save_hmm(const std::string& path, const HmmParamsd& params) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_hmm(os, params);
}

HmmParamsd load_hmm(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_hmm(is);
}

}  // namespace ealoc
