#include "polchinski/ising_exact.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace polchinski {

namespace {

struct Conditioned {
  std::vector<int> free_sites;
  std::vector<int> pinned_sites;
  std::vector<double> pinned_values;
};

Conditioned split_pinned(const Eigen::VectorXd& field) {
  Conditioned c;
  for (Eigen::Index i = 0; i < field.size(); ++i) {
    if (std::isinf(field[i])) {
      c.pinned_sites.push_back(static_cast<int>(i));
      c.pinned_values.push_back(field[i] > 0 ? 1.0 : -1.0);
    } else {
      c.free_sites.push_back(static_cast<int>(i));
    }
  }
  return c;
}

// Accumulators for one configuration block, summed in fixed block order.
struct BlockSums {
  double z = 0.0;
  Eigen::VectorXd s1;
  Eigen::MatrixXd s2;
};

double state_weight_exponent(const Eigen::MatrixXd& a, double beta, const Eigen::VectorXd& h,
                             const Eigen::VectorXd& sigma) {
  return -0.5 * beta * sigma.dot(a * sigma) + [&] {
    double v = 0.0;
    for (Eigen::Index i = 0; i < sigma.size(); ++i)
      if (!std::isinf(h[i])) v += h[i] * sigma[i];
    return v;
  }();
}

void fill_sigma(const Conditioned& cond, std::uint64_t bits, int n, Eigen::VectorXd& sigma) {
  for (size_t k = 0; k < cond.pinned_sites.size(); ++k)
    sigma[cond.pinned_sites[k]] = cond.pinned_values[k];
  for (size_t k = 0; k < cond.free_sites.size(); ++k)
    sigma[cond.free_sites[k]] = (bits >> k) & 1 ? 1.0 : -1.0;
  (void)n;
}

// Max weight exponent over all states, needed to stabilise the partition sum.
double max_exponent(const IsingModel& model, const Conditioned& cond,
                    const Eigen::VectorXd& field) {
  const int n = model.n_sites();
  const int nf = static_cast<int>(cond.free_sites.size());
  const std::uint64_t total = 1ULL << nf;
  double best = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd sigma(n);
#ifdef _OPENMP
#pragma omp parallel for reduction(max : best) firstprivate(sigma) schedule(static)
#endif
  for (std::int64_t bits = 0; bits < static_cast<std::int64_t>(total); ++bits) {
    fill_sigma(cond, static_cast<std::uint64_t>(bits), n, sigma);
    best = std::max(best,
                    state_weight_exponent(model.coupling.matrix(), model.beta, field, sigma));
  }
  return best;
}

IsingMoments enumerate_moments(const IsingModel& model, const Eigen::VectorXd& field) {
  const int n = model.n_sites();
  const Conditioned cond = split_pinned(field);
  const int nf = static_cast<int>(cond.free_sites.size());
  if (nf > 20) throw std::invalid_argument("ising_moments: > 20 free spins for enumeration");
  const std::uint64_t total = 1ULL << nf;
  const double shift = max_exponent(model, cond, field);

  const std::uint64_t block_size = std::min<std::uint64_t>(total, 1024);
  const std::uint64_t n_blocks = (total + block_size - 1) / block_size;
  std::vector<BlockSums> blocks(n_blocks);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::int64_t b = 0; b < static_cast<std::int64_t>(n_blocks); ++b) {
    BlockSums acc;
    acc.s1 = Eigen::VectorXd::Zero(n);
    acc.s2 = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd sigma(n);
    const std::uint64_t begin = b * block_size;
    const std::uint64_t end = std::min(total, begin + block_size);
    for (std::uint64_t bits = begin; bits < end; ++bits) {
      fill_sigma(cond, bits, n, sigma);
      const double w =
          std::exp(state_weight_exponent(model.coupling.matrix(), model.beta, field, sigma) -
                   shift);
      acc.z += w;
      acc.s1 += w * sigma;
      acc.s2.selfadjointView<Eigen::Lower>().rankUpdate(sigma, w);
    }
    blocks[b] = std::move(acc);
  }

  BlockSums total_acc;
  total_acc.s1 = Eigen::VectorXd::Zero(n);
  total_acc.s2 = Eigen::MatrixXd::Zero(n, n);
  for (const auto& b : blocks) {
    total_acc.z += b.z;
    total_acc.s1 += b.s1;
    total_acc.s2 += b.s2;
  }
  if (!(total_acc.z > 0)) throw std::runtime_error("ising_moments: vanishing partition function");

  IsingMoments out;
  out.mean = total_acc.s1 / total_acc.z;
  Eigen::MatrixXd m2 = total_acc.s2 / total_acc.z;
  m2 = m2.selfadjointView<Eigen::Lower>();
  out.second_moment = m2;
  out.covariance = m2 - out.mean * out.mean.transpose();
  out.log_partition = shift + std::log(total_acc.z);
  return out;
}

bool nearest_neighbour_chain(const Eigen::MatrixXd& a) {
  const Eigen::Index n = a.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const bool bond = (j == i + 1) || (i == 0 && j == n - 1);
      if (!bond && std::abs(a(i, j)) > 1e-14) return false;
    }
  return n >= 3;
}

// Ring transfer-matrix moments. Weights exp(sum_i K_i s_i s_{i+1} + h_i s_i)
// with K_i = -beta A_{i,i+1}; the diagonal of A only shifts log Z.
IsingMoments transfer_matrix_moments(const IsingModel& model, const Eigen::VectorXd& field) {
  const int n = model.n_sites();
  const auto& a = model.coupling.matrix();
  if (!nearest_neighbour_chain(a))
    throw std::invalid_argument("ising_moments: transfer matrix needs a nearest-neighbour ring");
  for (Eigen::Index i = 0; i < field.size(); ++i)
    if (std::isinf(field[i]))
      throw std::invalid_argument("ising_moments: pinned spins unsupported on transfer path");

  using M2 = Eigen::Matrix2d;
  const auto spin = [](int idx) { return idx == 0 ? 1.0 : -1.0; };
  std::vector<M2> t(n);
  double log_scale = 0.0;
  double diag = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k = -model.beta * a(i, (i + 1) % n);
    diag += -0.5 * model.beta * a(i, i);
    M2 ti;
    for (int s = 0; s < 2; ++s)
      for (int sp = 0; sp < 2; ++sp)
        ti(s, sp) = std::exp(k * spin(s) * spin(sp) + field[i] * spin(s));
    const double scale = ti.cwiseAbs().maxCoeff();
    ti /= scale;
    log_scale += std::log(scale);
    t[i] = ti;
  }

  // Prefix products L_i = T_0 ... T_{i-1}, suffix R_i = T_i ... T_{n-1},
  // renormalised with tracked log factors.
  std::vector<M2> prefix(n + 1), suffix(n + 1);
  std::vector<double> prefix_log(n + 1, 0.0), suffix_log(n + 1, 0.0);
  prefix[0] = M2::Identity();
  for (int i = 0; i < n; ++i) {
    prefix[i + 1] = prefix[i] * t[i];
    const double s = prefix[i + 1].cwiseAbs().maxCoeff();
    prefix[i + 1] /= s;
    prefix_log[i + 1] = prefix_log[i] + std::log(s);
  }
  suffix[n] = M2::Identity();
  for (int i = n - 1; i >= 0; --i) {
    suffix[i] = t[i] * suffix[i + 1];
    const double s = suffix[i].cwiseAbs().maxCoeff();
    suffix[i] /= s;
    suffix_log[i] = suffix_log[i + 1] + std::log(s);
  }

  const double z_red = (prefix[n]).trace();
  if (!(z_red > 0)) throw std::runtime_error("transfer matrix: vanishing partition function");

  const M2 sz = (M2() << 1, 0, 0, -1).finished();
  IsingMoments out;
  out.mean = Eigen::VectorXd::Zero(n);
  for (int x = 0; x < n; ++x) {
    const M2 num = prefix[x] * sz * suffix[x];
    const double corr = std::exp(prefix_log[x] + suffix_log[x] - prefix_log[n]);
    out.mean[x] = num.trace() * corr / z_red;
  }

  const bool want_cov = n <= 2048;
  if (want_cov) {
    out.second_moment = Eigen::MatrixXd::Zero(n, n);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (int x = 0; x < n; ++x) {
      M2 mid = sz;  // running product sz * T_x * ... * T_{y-1}
      double mid_log = 0.0;
      out.second_moment(x, x) = 1.0;
      for (int y = x + 1; y < n; ++y) {
        mid = mid * t[y - 1];
        const double s = mid.cwiseAbs().maxCoeff();
        mid /= s;
        mid_log += std::log(s);
        const M2 num = prefix[x] * mid * sz * suffix[y];
        const double corr = std::exp(prefix_log[x] + mid_log + suffix_log[y] - prefix_log[n]);
        out.second_moment(x, y) = num.trace() * corr / z_red;
        out.second_moment(y, x) = out.second_moment(x, y);
      }
    }
    out.covariance = out.second_moment - out.mean * out.mean.transpose();
  }
  out.log_partition = diag + log_scale + prefix_log[n] + std::log(z_red);
  return out;
}

}  // namespace

IsingMoments ising_moments(const IsingModel& model, std::optional<Eigen::VectorXd> field_override,
                           IsingMethod method) {
  const Eigen::VectorXd field = field_override.value_or(model.field);
  if (field.size() != model.n_sites())
    throw std::invalid_argument("ising_moments: field size mismatch");
  const int nf = static_cast<int>(model.n_sites() - split_pinned(field).pinned_sites.size());
  switch (method) {
    case IsingMethod::Enumeration: return enumerate_moments(model, field);
    case IsingMethod::TransferMatrix: return transfer_matrix_moments(model, field);
    case IsingMethod::Auto:
      if (nf <= 20) return enumerate_moments(model, field);
      if (model.n_sites() <= 10000 && nearest_neighbour_chain(model.coupling.matrix()))
        return transfer_matrix_moments(model, field);
      throw std::invalid_argument("ising_moments: N too large for the requested method");
  }
  throw std::logic_error("unreachable");
}

namespace ref {

IsingMoments ising_moments_serial(const IsingModel& model,
                                  std::optional<Eigen::VectorXd> field_override) {
  const Eigen::VectorXd field = field_override.value_or(model.field);
  const int n = model.n_sites();
  const Conditioned cond = split_pinned(field);
  const int nf = static_cast<int>(cond.free_sites.size());
  if (nf > 20) throw std::invalid_argument("ising_moments_serial: > 20 free spins");
  const std::uint64_t total = 1ULL << nf;

  double shift = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd sigma(n);
  for (std::uint64_t bits = 0; bits < total; ++bits) {
    fill_sigma(cond, bits, n, sigma);
    shift = std::max(shift,
                     state_weight_exponent(model.coupling.matrix(), model.beta, field, sigma));
  }
  double z = 0.0;
  Eigen::VectorXd s1 = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(n, n);
  for (std::uint64_t bits = 0; bits < total; ++bits) {
    fill_sigma(cond, bits, n, sigma);
    const double w = std::exp(
        state_weight_exponent(model.coupling.matrix(), model.beta, field, sigma) - shift);
    z += w;
    s1 += w * sigma;
    s2 += w * sigma * sigma.transpose();
  }
  IsingMoments out;
  out.mean = s1 / z;
  out.second_moment = s2 / z;
  out.covariance = out.second_moment - out.mean * out.mean.transpose();
  out.log_partition = shift + std::log(z);
  return out;
}

}  // namespace ref

double susceptibility(const IsingModel& model, SusceptibilityMode mode, IsingMethod method) {
  if (model.field.cwiseAbs().maxCoeff() != 0.0)
    throw std::invalid_argument("susceptibility: requires zero external field");
  const IsingMoments m = ising_moments(model, std::nullopt, method);
  if (mode == SusceptibilityMode::RowSum) {
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index x = 0; x < m.second_moment.rows(); ++x)
      best = std::max(best, m.second_moment.row(x).sum());
    return best;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.second_moment);
  return solver.eigenvalues().maxCoeff();
}

Eigen::VectorXd ising_state_probabilities(const IsingModel& model) {
  const int n = model.n_sites();
  if (n > 20) throw std::invalid_argument("ising_state_probabilities: N too large");
  const std::uint64_t total = 1ULL << n;
  Eigen::VectorXd w(total);
  Eigen::VectorXd sigma(n);
  double shift = -std::numeric_limits<double>::infinity();
  for (std::uint64_t bits = 0; bits < total; ++bits) {
    for (int k = 0; k < n; ++k) sigma[k] = (bits >> k) & 1 ? 1.0 : -1.0;
    w[bits] = state_weight_exponent(model.coupling.matrix(), model.beta, model.field, sigma);
    shift = std::max(shift, w[bits]);
  }
  for (std::uint64_t bits = 0; bits < total; ++bits) w[bits] = std::exp(w[bits] - shift);
  return w / w.sum();
}

double glauber_spectral_gap(const IsingModel& model) {
  const int n = model.n_sites();
  if (n > 12) throw std::invalid_argument("glauber_spectral_gap: dense path capped at N=12");
  const Eigen::VectorXd nu = ising_state_probabilities(model);
  const std::uint64_t total = 1ULL << n;

  // Symmetrised generator S = D^{1/2} (-L) D^{-1/2}, D = diag(nu).
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(total, total);
  for (std::uint64_t st = 0; st < total; ++st) {
    double diag = 0.0;
    for (int x = 0; x < n; ++x) {
      const std::uint64_t flip = st ^ (1ULL << x);
      const double rate = 0.5 * (1.0 + nu[flip] / nu[st]);
      diag += rate;
      s(st, flip) = -rate * std::sqrt(nu[st] / nu[flip]);
    }
    s(st, st) = diag;
  }
  s = 0.5 * (s + s.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s);
  return solver.eigenvalues()[1];  // smallest is 0
}

double ising_entropy(const IsingModel& model, const Eigen::VectorXd& f_by_state) {
  const Eigen::VectorXd nu = ising_state_probabilities(model);
  if (nu.size() != f_by_state.size())
    throw std::invalid_argument("ising_entropy: state vector size mismatch");
  double ef = 0.0, eflogf = 0.0;
  for (Eigen::Index i = 0; i < nu.size(); ++i) {
    if (f_by_state[i] <= 0) throw std::invalid_argument("ising_entropy: F must be positive");
    ef += nu[i] * f_by_state[i];
    eflogf += nu[i] * f_by_state[i] * std::log(f_by_state[i]);
  }
  return eflogf - ef * std::log(ef);
}

double ising_dirichlet_standard(const IsingModel& model, const Eigen::VectorXd& f_by_state) {
  const int n = model.n_sites();
  const Eigen::VectorXd nu = ising_state_probabilities(model);
  double d = 0.0;
  for (Eigen::Index st = 0; st < nu.size(); ++st)
    for (int x = 0; x < n; ++x) {
      const std::uint64_t flip = static_cast<std::uint64_t>(st) ^ (1ULL << x);
      const double diff = f_by_state[flip] - f_by_state[st];
      d += 0.5 * nu[st] * diff * diff;
    }
  return d;
}

double ising_dirichlet_heatbath(const IsingModel& model, const Eigen::VectorXd& f_by_state,
                                const Eigen::VectorXd& g_by_state) {
  const int n = model.n_sites();
  const Eigen::VectorXd nu = ising_state_probabilities(model);
  double d = 0.0;
  for (Eigen::Index st = 0; st < nu.size(); ++st)
    for (int x = 0; x < n; ++x) {
      const std::uint64_t flip = static_cast<std::uint64_t>(st) ^ (1ULL << x);
      const double psi = nu[st] * nu[flip] / (nu[st] + nu[flip]);
      d += 0.5 * psi * (f_by_state[flip] - f_by_state[st]) * (g_by_state[flip] - g_by_state[st]);
    }
  return d;
}

}  // namespace polchinski
