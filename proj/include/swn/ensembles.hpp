#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "swn/rng.hpp"
#include "swn/version.hpp"

namespace swn::ensembles {

/// Zero-mean, unit-variance i.i.d. dictionary ensembles.
enum class DictionaryKind { gaussian, bernoulli };

inline const char* to_string(DictionaryKind kind) {
  return kind == DictionaryKind::gaussian ? "gaussian" : "bernoulli";
}

inline DictionaryKind kind_from_string(std::string_view s) {
  if (s == "gaussian") return DictionaryKind::gaussian;
  if (s == "bernoulli") return DictionaryKind::bernoulli;
  throw std::domain_error("unknown dictionary kind: " + std::string(s));
}

/// One WGN realization with its dictionary. m = round(alpha*n); omega and the
/// dictionary come from disjoint sub-streams of the seed, so they are
/// statistically independent and individually reproducible.
struct ProblemInstance {
  Eigen::Index m;
  Eigen::Index n;
  double alpha;
  DictionaryKind kind;
  Eigen::MatrixXd dictionary; // m x n
  Eigen::VectorXd omega;      // length m
  std::uint64_t seed;
};

/// Fill an m x n dictionary from an explicit stream (column-major fill order,
/// part of the reproducibility contract).
inline Eigen::MatrixXd draw_dictionary(Eigen::Index m, Eigen::Index n,
                                       DictionaryKind kind, rng::Stream& stream) {
  Eigen::MatrixXd d(m, n);
  if (kind == DictionaryKind::gaussian) {
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < m; ++i) d(i, j) = stream.normal();
  } else {
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < m; ++i)
        d(i, j) = (stream.next_u64() & 1ull) ? 1.0 : -1.0;
  }
  return d;
}

inline ProblemInstance draw_instance(Eigen::Index n, double alpha,
                                     DictionaryKind kind, std::uint64_t seed) {
  if (n < 2) throw std::domain_error("draw_instance: n must be >= 2");
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw std::domain_error("draw_instance: alpha must be in (0,1]");
  const auto m = static_cast<Eigen::Index>(std::llround(alpha * static_cast<double>(n)));
  if (m < 1) throw std::domain_error("draw_instance: round(alpha*n) is zero");

  rng::Stream dict_stream(seed, "dictionary");
  rng::Stream noise_stream(seed, "noise");

  ProblemInstance inst;
  inst.m = m;
  inst.n = n;
  inst.alpha = alpha;
  inst.kind = kind;
  inst.seed = seed;
  inst.dictionary = draw_dictionary(m, n, kind, dict_stream);
  inst.omega.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) inst.omega[i] = noise_stream.normal();
  return inst;
}

/// omega = (1/sqrt(n)) D z
inline Eigen::VectorXd synthesize(const Eigen::MatrixXd& dictionary,
                                  const Eigen::VectorXd& z) {
  if (z.size() != dictionary.cols())
    throw std::invalid_argument("synthesize: z length must match atom count");
  return dictionary * z / std::sqrt(static_cast<double>(dictionary.cols()));
}

/// Instance dump for cross-tool debugging. Layout:
///   # swn <version>
///   # generator=<rng scheme>
///   # m=<m>,n=<n>,alpha=<alpha>,kind=<kind>,seed=<seed>
///   omega,<m values>
///   D,<row 0: n values>       (row-major, one line per row)
///   ...
inline void write_instance_csv(std::ostream& out, const ProblemInstance& inst) {
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << ',' << buf;
  };
  out << "# swn " << version << "\n";
  out << "# generator=" << rng::scheme << "\n";
  std::snprintf(buf, sizeof(buf), "%.17g", inst.alpha);
  out << "# m=" << inst.m << ",n=" << inst.n << ",alpha=" << buf
      << ",kind=" << to_string(inst.kind) << ",seed=" << inst.seed << "\n";
  out << "omega";
  for (Eigen::Index i = 0; i < inst.m; ++i) put(inst.omega[i]);
  out << "\n";
  for (Eigen::Index i = 0; i < inst.m; ++i) {
    out << "D";
    for (Eigen::Index j = 0; j < inst.n; ++j) put(inst.dictionary(i, j));
    out << "\n";
  }
}

} // namespace swn::ensembles
