#include "herdval/herding.hpp"

#include <sstream>

namespace herdval {

namespace {

constexpr double kZeroRowTol = 1e-12;

void validate(const HerdingConfig& cfg) {
  if (!cfg.kernel) throw std::invalid_argument("herding: null kernel");
  if (!cfg.mu) throw std::invalid_argument("herding: null mu");
  if (&cfg.mu->kernel() != cfg.kernel.get()) {
    throw std::invalid_argument("herding: mu is bound to a different kernel");
  }
  if (cfg.candidates.cols() == 0) throw std::invalid_argument("herding: empty candidate set");
  if (cfg.candidates.rows() != cfg.kernel->dim()) {
    throw std::invalid_argument("herding: candidate dimension mismatch");
  }
  if (cfg.initial.cols() > 0 && cfg.initial.rows() != cfg.kernel->dim()) {
    throw std::invalid_argument("herding: initial design dimension mismatch");
  }
  if (cfg.count < 0) throw std::invalid_argument("herding: negative count");
}

bool same_point(ConstPointRef a, ConstPointRef b) {
  for (Index i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return false;
  }
  return true;
}

bool point_in(ConstPointRef x, const Points& set, Index count) {
  for (Index j = 0; j < count; ++j) {
    if (same_point(x, set.col(j))) return true;
  }
  return false;
}

// Cholesky factor that grows one row at a time; rank-one style updates keep
// the per-iteration weight re-solve at O(k^2).
class GrowingCholesky {
 public:
  explicit GrowingCholesky(Index capacity) : l_(Matrix::Zero(capacity, capacity)) {}

  Index size() const { return k_; }

  bool try_append(const Vector& cross, double diag) {
    Vector l(k_);
    for (Index i = 0; i < k_; ++i) {
      l[i] = (cross[i] - l_.row(i).head(i).dot(l.head(i))) / l_(i, i);
    }
    const double s2 = diag - l.squaredNorm();
    if (!(s2 > 0.0) || s2 <= 1e-14 * diag) return false;
    l_.row(k_).head(k_) = l.transpose();
    l_(k_, k_) = std::sqrt(s2);
    ++k_;
    return true;
  }

  Vector solve(Vector rhs) const {
    for (Index i = 0; i < k_; ++i) {
      rhs[i] = (rhs[i] - l_.row(i).head(i).dot(rhs.head(i))) / l_(i, i);
    }
    for (Index i = k_ - 1; i >= 0; --i) {
      double s = rhs[i];
      for (Index j = i + 1; j < k_; ++j) s -= l_(j, i) * rhs[j];
      rhs[i] = s / l_(i, i);
    }
    return rhs;
  }

 private:
  Matrix l_;
  Index k_ = 0;
};

DiscreteMeasure measure_or_empty(const Points& support, const Vector& weights) {
  DiscreteMeasure m;
  m.support = support;
  m.weights = weights;
  return m;
}

}  // namespace

Index argmin_with_ties(const Vector& scores, double tie_tol) {
  const double best = scores.minCoeff();
  for (Index j = 0; j < scores.size(); ++j) {
    if (scores[j] <= best + tie_tol) return j;
  }
  return 0;  // unreachable
}

namespace {

// Plain kernel herding; also drives the exclusion variant.
HerdingTrace kh_engine(const HerdingConfig& cfg, bool exclude_mode) {
  validate(cfg);
  const Kernel& kernel = *cfg.kernel;
  const Index q = cfg.candidates.cols();
  const Index k1 = cfg.initial.cols();
  const Index cap = exclude_mode
                        ? (cfg.max_iterations > 0 ? cfg.max_iterations : 50 * std::max<Index>(cfg.count, 1))
                        : cfg.count;

  auto bound = kernel.bind(cfg.candidates);
  Vector pmu(q);
  cfg.mu->potential_row(cfg.candidates, pmu);
  const double e_mu = cfg.mu->energy();

  Points support(cfg.candidates.rows(), k1 + cap);
  Index nsupport = 0;
  Vector sum_c = Vector::Zero(q);
  double pair_sum = 0.0;
  double pmu_sum = 0.0;

  Vector row_buf(q);
  for (Index i = 0; i < k1; ++i) {
    ConstPointRef x = cfg.initial.col(i);
    bound->row(x, row_buf);
    sum_c += row_buf;
    Vector cz(nsupport);
    if (nsupport > 0) kernel.row(x, support.leftCols(nsupport), cz);
    pair_sum += 2.0 * cz.sum() + kernel.diag(x);
    pmu_sum += cfg.mu->potential(x);
    support.col(nsupport++) = x;
  }

  HerdingTrace trace;
  Points selections(cfg.candidates.rows(), cap);
  std::vector<Index> counted;  // indices into selections (kh_exclude)
  Index nsel = 0;
  Index off_exclude = 0;

  while (true) {
    const Index target_reached = exclude_mode ? static_cast<Index>(counted.size()) : nsel;
    if (target_reached >= cfg.count) break;
    if (nsel >= cap) {
      if (exclude_mode) {
        std::ostringstream os;
        os << "kh_exclude: iteration cap " << cap << " reached with "
           << counted.size() << "/" << cfg.count << " points selected";
        trace.selected = selections.leftCols(nsel);
        trace.iterations = nsel;
        throw IterationCapError(os.str(), std::move(trace));
      }
      break;
    }

    Vector scores = nsupport == 0
                        ? (-pmu).eval()
                        : (sum_c / static_cast<double>(nsupport) - pmu).eval();
    const Index j = argmin_with_ties(scores, cfg.tie_tol);
    ConstPointRef z = cfg.candidates.col(j);

    SelectionEvent ev;
    ev.iteration = nsel;
    ev.candidate = j;
    ev.in_exclude = exclude_mode && point_in(z, cfg.exclude, cfg.exclude.cols());
    ev.duplicate = point_in(z, selections, nsel) || point_in(z, cfg.initial, k1);
    if (ev.in_exclude || ev.duplicate) trace.events.push_back(ev);

    bound->row(z, row_buf);
    Vector cz(nsupport);
    if (nsupport > 0) kernel.row(z, support.leftCols(nsupport), cz);
    pair_sum += 2.0 * cz.sum() + bound->diag(j);
    pmu_sum += pmu[j];
    sum_c += row_buf;
    support.col(nsupport++) = z;
    selections.col(nsel++) = z;
    trace.selected_indices.push_back(j);
    if (!ev.in_exclude) ++off_exclude;

    if (exclude_mode && !ev.in_exclude) {
      bool count_it = true;
      if (cfg.distinct) {
        for (Index c : counted) {
          if (same_point(z, selections.col(c))) {
            count_it = false;
            break;
          }
        }
      }
      if (count_it) counted.push_back(nsel - 1);
    }

    const double t = static_cast<double>(nsupport);
    trace.mmd2.push_back(pair_sum / (t * t) - 2.0 * pmu_sum / t + e_mu);
    trace.total_mass.push_back(exclude_mode ? static_cast<double>(off_exclude) / static_cast<double>(nsel)
                                            : 1.0);
  }

  trace.selected = selections.leftCols(nsel);
  trace.iterations = nsel;
  if (exclude_mode) {
    trace.design.resize(cfg.candidates.rows(), static_cast<Index>(counted.size()));
    trace.design_weights.resize(static_cast<Index>(counted.size()));
    for (std::size_t i = 0; i < counted.size(); ++i) {
      trace.design.col(static_cast<Index>(i)) = selections.col(counted[i]);
    }
    if (nsel > 0) {
      if (cfg.distinct) {
        // mass of each distinct point is its multiplicity among all selections
        for (std::size_t i = 0; i < counted.size(); ++i) {
          Index mult = 0;
          for (Index s = 0; s < nsel; ++s) {
            if (same_point(trace.design.col(static_cast<Index>(i)), selections.col(s))) ++mult;
          }
          trace.design_weights[static_cast<Index>(i)] =
              static_cast<double>(mult) / static_cast<double>(nsel);
        }
      } else {
        trace.design_weights.setConstant(1.0 / static_cast<double>(nsel));
      }
    }
  } else {
    trace.design = trace.selected;
  }
  if (nsupport > 0) {
    trace.final_measure = measure_or_empty(
        support.leftCols(nsupport),
        Vector::Constant(nsupport, 1.0 / static_cast<double>(nsupport)));
  }
  return trace;
}

// Minimum-norm herding; free_weights selects the unconstrained variant.
HerdingTrace mn_engine(const HerdingConfig& cfg, bool free_weights) {
  validate(cfg);
  const Kernel& kernel = *cfg.kernel;
  const Index q = cfg.candidates.cols();
  const Index k1 = cfg.initial.cols();
  const Index max_support = k1 + cfg.count;

  const std::size_t table_bytes =
      static_cast<std::size_t>(q) * static_cast<std::size_t>(max_support) * sizeof(double);
  if (table_bytes > cfg.memory_cap) {
    std::ostringstream os;
    os << "minimum-norm herding: candidate table needs " << table_bytes
       << " bytes, above the configured cap of " << cfg.memory_cap;
    throw std::runtime_error(os.str());
  }

  auto bound = kernel.bind(cfg.candidates);
  Vector pmu(q);
  cfg.mu->potential_row(cfg.candidates, pmu);
  const double e_mu = cfg.mu->energy();

  Points support(cfg.candidates.rows(), max_support);
  Matrix table(q, max_support);   // C(cand_j, s_i)
  Matrix gram_s = Matrix::Zero(max_support, max_support);
  Vector p_s(max_support);
  GrowingCholesky chol(max_support);
  std::vector<Index> active;
  std::vector<char> pruned;
  Index nsupport = 0;

  auto append_support = [&](ConstPointRef z, double pz, double dz, const Vector& row_cand) {
    Vector cz(nsupport);
    if (nsupport > 0) kernel.row(z, support.leftCols(nsupport), cz);
    support.col(nsupport) = z;
    table.col(nsupport) = row_cand;
    gram_s.col(nsupport).head(nsupport) = cz;
    gram_s.row(nsupport).head(nsupport) = cz.transpose();
    gram_s(nsupport, nsupport) = dz;
    p_s[nsupport] = pz;

    const double row_max = std::max(nsupport > 0 ? cz.cwiseAbs().maxCoeff() : 0.0, std::abs(dz));
    if (free_weights && row_max < kZeroRowTol) {
      pruned.push_back(1);
      ++nsupport;
      return;
    }
    Vector cross(static_cast<Index>(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i) cross[static_cast<Index>(i)] = cz[active[i]];
    if (!chol.try_append(cross, dz)) {
      throw WeightSolveError(
          free_weights
              ? "mn2: Gram matrix singular after pruning (near-duplicate support points)"
              : "mn: Gram matrix singular on the support; use the MN2 variant for "
                "kernels that vanish on the conditioning design");
    }
    active.push_back(nsupport);
    pruned.push_back(0);
    ++nsupport;
  };

  Vector row_buf(q);
  for (Index i = 0; i < k1; ++i) {
    ConstPointRef x = cfg.initial.col(i);
    bound->row(x, row_buf);
    append_support(x, cfg.mu->potential(x), kernel.diag(x), row_buf);
  }

  auto solve_weights = [&]() -> Vector {
    Vector w = Vector::Zero(nsupport);
    if (active.empty()) return w;
    Vector pa(static_cast<Index>(active.size()));
    for (std::size_t i = 0; i < active.size(); ++i) pa[static_cast<Index>(i)] = p_s[active[i]];
    Vector wa;
    if (free_weights) {
      wa = chol.solve(pa);
    } else {
      const Vector a = chol.solve(pa);
      const Vector b = chol.solve(Vector::Ones(static_cast<Index>(active.size())));
      wa = a + b * ((1.0 - a.sum()) / b.sum());
    }
    for (std::size_t i = 0; i < active.size(); ++i) w[active[i]] = wa[static_cast<Index>(i)];
    return w;
  };

  HerdingTrace trace;
  Points selections(cfg.candidates.rows(), cfg.count);
  Index nsel = 0;
  Vector w = solve_weights();

  while (nsel < cfg.count) {
    Vector scores =
        nsupport == 0 ? (-pmu).eval()
                      : (table.leftCols(nsupport) * w - pmu).eval();
    const Index j = argmin_with_ties(scores, cfg.tie_tol);
    ConstPointRef z = cfg.candidates.col(j);

    SelectionEvent ev;
    ev.iteration = nsel;
    ev.candidate = j;
    ev.duplicate = point_in(z, support, nsupport);
    if (ev.duplicate) trace.events.push_back(ev);

    selections.col(nsel++) = z;
    trace.selected_indices.push_back(j);
    if (!ev.duplicate) {
      bound->row(z, row_buf);
      append_support(z, pmu[j], bound->diag(j), row_buf);
    }

    w = solve_weights();
    trace.weights.push_back(w);
    trace.total_mass.push_back(w.sum());
    const auto g = gram_s.topLeftCorner(nsupport, nsupport);
    trace.mmd2.push_back(w.dot(g * w) - 2.0 * w.dot(p_s.head(nsupport)) + e_mu);
  }

  trace.selected = selections.leftCols(nsel);
  trace.design = trace.selected;
  trace.iterations = nsel;
  if (nsupport > 0) {
    trace.final_measure = measure_or_empty(support.leftCols(nsupport), w);
  }
  return trace;
}

}  // namespace

HerdingTrace run_kh(const HerdingConfig& cfg) { return kh_engine(cfg, false); }

HerdingTrace run_kh_exclude(const HerdingConfig& cfg) { return kh_engine(cfg, true); }

HerdingTrace run_mn(const HerdingConfig& cfg) { return mn_engine(cfg, false); }

HerdingTrace run_mn2(const HerdingConfig& cfg) { return mn_engine(cfg, true); }

HerdingTrace run_herding(const HerdingConfig& cfg) {
  switch (cfg.variant) {
    case HerdingVariant::kh:
      return run_kh(cfg);
    case HerdingVariant::kh_exclude:
      return run_kh_exclude(cfg);
    case HerdingVariant::mn:
      return run_mn(cfg);
    case HerdingVariant::mn2:
      return run_mn2(cfg);
  }
  throw std::logic_error("run_herding: unknown variant");
}

}  // namespace herdval
