#pragma once

// Plain-text containers for systems, bases and reduction results, plus the
// CSV writers behind the CLI. Numbers are written with 17 significant digits
// so that read-back is exact and repeated runs are byte-identical.

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "adrmor/bilinear.hpp"
#include "adrmor/errors.hpp"
#include "adrmor/reduction.hpp"
#include "adrmor/simulate.hpp"

namespace adrmor {

/// Header lines ("# key: value") stamped at the top of every artifact.
using Provenance = std::vector<std::pair<std::string, std::string>>;

inline std::string format_double(double x) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace detail {

inline void write_provenance(std::ostream& os, const Provenance& prov) {
  for (const auto& [k, v] : prov) os << "# " << k << ": " << v << '\n';
}

inline void write_dense(std::ostream& os, const std::string& tag, const Eigen::MatrixXd& M) {
  os << tag << ' ' << M.rows() << ' ' << M.cols() << '\n';
  for (Index i = 0; i < M.rows(); ++i) {
    for (Index j = 0; j < M.cols(); ++j) os << (j ? " " : "") << format_double(M(i, j));
    os << '\n';
  }
}

inline void write_sparse(std::ostream& os, const std::string& tag, const SparseMatrix& M) {
  std::vector<Eigen::Triplet<double>> t;
  for (Index j = 0; j < M.outerSize(); ++j)
    for (SparseMatrix::InnerIterator it(M, j); it; ++it)
      if (it.value() != 0.0) t.emplace_back(it.row(), it.col(), it.value());
  os << tag << ' ' << M.rows() << ' ' << M.cols() << ' ' << t.size() << '\n';
  for (const auto& e : t) os << e.row() << ' ' << e.col() << ' ' << format_double(e.value()) << '\n';
}

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  /// Next non-comment, non-blank line split into tokens.
  std::vector<std::string> tokens() {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_no_;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      std::vector<std::string> out;
      for (std::string w; ls >> w;) out.push_back(w);
      if (!out.empty()) return out;
    }
    fail("unexpected end of file");
  }

  std::vector<std::string> expect(const std::string& tag, std::size_t count) {
    auto t = tokens();
    if (t.front() != tag || t.size() != count) {
      fail("expected '" + tag + "' with " + std::to_string(count - 1) + " fields, got '" + t.front() + "'");
    }
    return t;
  }

  Index index(const std::string& s) {
    Index v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v < 0) fail("bad integer '" + s + "'");
    return v;
  }

  double number(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) fail("bad number '" + s + "'");
    return v;
  }

  Eigen::MatrixXd dense(const std::string& tag) {
    const auto h = expect(tag, 3);
    const Index r = index(h[1]), c = index(h[2]);
    Eigen::MatrixXd M(r, c);
    for (Index i = 0; i < r; ++i) {
      const auto row = tokens();
      if (static_cast<Index>(row.size()) != c) fail("row " + std::to_string(i) + " of " + tag + " has wrong length");
      for (Index j = 0; j < c; ++j) M(i, j) = number(row[static_cast<std::size_t>(j)]);
    }
    return M;
  }

  SparseMatrix sparse(const std::string& tag) {
    const auto h = expect(tag, 4);
    const Index r = index(h[1]), c = index(h[2]), nnz = index(h[3]);
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(nnz));
    for (Index k = 0; k < nnz; ++k) {
      const auto e = tokens();
      if (e.size() != 3) fail("sparse entry needs 3 fields");
      const Index i = index(e[0]), j = index(e[1]);
      if (i >= r || j >= c) fail("sparse entry out of range");
      t.emplace_back(i, j, number(e[2]));
    }
    SparseMatrix M(r, c);
    M.setFromTriplets(t.begin(), t.end());
    return M;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw ValidationError("line " + std::to_string(line_no_) + ": " + msg);
  }

 private:
  std::istream& is_;
  int line_no_ = 0;
};

}  // namespace detail

inline constexpr const char* kSystemMagic = "adrmor-bilinear-system 1";
inline constexpr const char* kReductionMagic = "adrmor-reduction 1";

namespace detail {

inline void write_system_body(std::ostream& os, const BilinearSystem& sys) {
  os << "dims " << sys.state_dim() << ' ' << sys.input_dim() << ' ' << sys.output_dim() << '\n';
  os << "dx " << format_double(sys.dx) << '\n';
  os << "labels " << sys.input_labels.size();
  for (const auto& l : sys.input_labels) os << ' ' << l;
  os << '\n';
  write_dense(os, "A", sys.A);
  for (std::size_t i = 0; i < sys.slices.size(); ++i) write_sparse(os, "N" + std::to_string(i), sys.slices[i]);
  write_dense(os, "B", sys.B);
  write_dense(os, "C", sys.C);
}

inline BilinearSystem read_system_body(Reader& r) {
  BilinearSystem sys;
  const auto d = r.expect("dims", 4);
  const Index m = r.index(d[2]);
  sys.dx = r.number(r.expect("dx", 2)[1]);
  const auto l = r.tokens();
  if (l.front() != "labels" || l.size() < 2 || static_cast<Index>(l.size()) != r.index(l[1]) + 2) {
    r.fail("malformed labels line");
  }
  sys.input_labels.assign(l.begin() + 2, l.end());
  sys.A = r.dense("A");
  for (Index i = 0; i < m; ++i) sys.slices.push_back(r.sparse("N" + std::to_string(i)));
  sys.B = r.dense("B");
  sys.C = r.dense("C");
  if (sys.A.rows() != r.index(d[1]) || sys.C.rows() != r.index(d[3])) r.fail("dimensions disagree with dims line");
  sys.validate();
  return sys;
}

}  // namespace detail

inline void write_system(std::ostream& os, const BilinearSystem& sys, const Provenance& prov = {}) {
  os << kSystemMagic << '\n';
  detail::write_provenance(os, prov);
  detail::write_system_body(os, sys);
}

inline BilinearSystem read_system(std::istream& is) {
  detail::Reader r(is);
  const auto magic = r.tokens();
  if (magic.size() != 2 || magic[0] + " " + magic[1] != kSystemMagic) r.fail("not a bilinear system file");
  return detail::read_system_body(r);
}

inline void write_reduction(std::ostream& os, const ReductionResult& res, const Provenance& prov = {}) {
  os << kReductionMagic << '\n';
  detail::write_provenance(os, prov);
  os << "status " << (res.converged ? 1 : 0) << ' ' << res.iterations << ' ' << res.restarts << '\n';
  detail::write_dense(os, "V", res.V);
  detail::write_dense(os, "W", res.W);
  detail::write_dense(os, "history", Eigen::Map<const Eigen::MatrixXd>(res.error_history.data(), 1,
                                                                        static_cast<Index>(res.error_history.size())));
  detail::write_system_body(os, res.rom);
}

inline ReductionResult read_reduction(std::istream& is) {
  detail::Reader r(is);
  const auto magic = r.tokens();
  if (magic.size() != 2 || magic[0] + " " + magic[1] != kReductionMagic) r.fail("not a reduction file");
  ReductionResult res;
  const auto st = r.expect("status", 4);
  res.converged = st[1] == "1";
  res.iterations = static_cast<int>(r.index(st[2]));
  res.restarts = static_cast<int>(r.index(st[3]));
  res.V = r.dense("V");
  res.W = r.dense("W");
  const Eigen::MatrixXd h = r.dense("history");
  res.error_history.assign(h.data(), h.data() + h.size());
  res.rom = detail::read_system_body(r);
  return res;
}

template <typename Fn>
void write_file(const std::string& path, Fn&& body) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open '" + path + "' for writing");
  body(os);
  if (!os) throw ValidationError("write to '" + path + "' failed");
}

template <typename Fn>
auto read_file(const std::string& path, Fn&& body) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open '" + path + "'");
  try {
    return body(is);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

// CSV writers. Units go in the provenance lines; the header row is mandatory.

/// Space-time surface: one row per recorded time, one column per node.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr, const Eigen::VectorXd& x,
                                 const Provenance& prov = {}) {
  detail::require(x.size() == tr.outputs.cols(), "node coordinates do not match the output count");
  detail::write_provenance(os, prov);
  os << "t";
  for (Index i = 0; i < x.size(); ++i) os << ",x=" << format_double(x(i));
  os << '\n';
  for (Index k = 0; k < tr.outputs.rows(); ++k) {
    os << format_double(tr.times[static_cast<std::size_t>(k)]);
    for (Index i = 0; i < tr.outputs.cols(); ++i) os << ',' << format_double(tr.outputs(k, i));
    os << '\n';
  }
}

/// Reads a surface written by write_trajectory_csv (wall time is not stored).
inline Trajectory read_trajectory_csv(std::istream& is) {
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& msg) -> void {
    throw ValidationError("line " + std::to_string(line_no) + ": " + msg);
  };
  Index cols = -1;
  std::vector<std::vector<double>> rows;
  Trajectory tr;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    for (std::string f; std::getline(ls, f, ',');) fields.push_back(f);
    if (cols < 0) {
      if (fields.empty() || fields[0] != "t") fail("expected a header row starting with 't'");
      cols = static_cast<Index>(fields.size()) - 1;
      continue;
    }
    if (static_cast<Index>(fields.size()) != cols + 1) fail("row has " + std::to_string(fields.size()) + " fields");
    std::vector<double> vals;
    for (const auto& f : fields) {
      double v = 0.0;
      const auto res = std::from_chars(f.data(), f.data() + f.size(), v);
      if (res.ec != std::errc() || res.ptr != f.data() + f.size()) fail("bad number '" + f + "'");
      vals.push_back(v);
    }
    rows.push_back(std::move(vals));
  }
  if (cols < 0) fail("missing header row");
  tr.outputs.resize(static_cast<Index>(rows.size()), cols);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    tr.times.push_back(rows[k][0]);
    for (Index i = 0; i < cols; ++i) tr.outputs(static_cast<Index>(k), i) = rows[k][static_cast<std::size_t>(i) + 1];
  }
  tr.states = tr.outputs;
  return tr;
}

/// Profiles: columns x, then one column per requested series.
inline void write_columns_csv(std::ostream& os, const std::vector<std::string>& names,
                              const std::vector<Eigen::VectorXd>& cols, const Provenance& prov = {}) {
  detail::require(names.size() == cols.size() && !cols.empty(), "column names and data disagree");
  for (const auto& c : cols) detail::require(c.size() == cols.front().size(), "columns differ in length");
  detail::write_provenance(os, prov);
  for (std::size_t j = 0; j < names.size(); ++j) os << (j ? "," : "") << names[j];
  os << '\n';
  for (Index i = 0; i < cols.front().size(); ++i) {
    for (std::size_t j = 0; j < cols.size(); ++j) os << (j ? "," : "") << format_double(cols[j](i));
    os << '\n';
  }
}

inline void write_error_history_csv(std::ostream& os, const std::vector<double>& history, const Provenance& prov = {}) {
  detail::write_provenance(os, prov);
  os << "iteration,h2_error\n";
  for (std::size_t k = 0; k < history.size(); ++k) os << k + 1 << ',' << format_double(history[k]) << '\n';
}

/// Mode shapes: node coordinate, then the columns of V.
inline void write_modes_csv(std::ostream& os, const Eigen::MatrixXd& V, const Eigen::VectorXd& x,
                            const Provenance& prov = {}) {
  detail::require(V.rows() == x.size(), "mode shapes do not match the node count");
  std::vector<std::string> names{"x"};
  std::vector<Eigen::VectorXd> cols{x};
  for (Index j = 0; j < V.cols(); ++j) {
    names.push_back("mode" + std::to_string(j + 1));
    cols.emplace_back(V.col(j));
  }
  write_columns_csv(os, names, cols, prov);
}

}  // namespace adrmor
