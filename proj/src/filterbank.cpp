#include "gaborikl/filterbank.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>

#include "gaborikl/errors.hpp"
#include "gaborikl/imaging.hpp"
#include "gaborikl/log.hpp"
#include "gaborikl/serialize.hpp"
#include "gaborikl/sikl.hpp"

namespace gaborikl {

using std::numbers::pi;

namespace {

constexpr double kThetaWeight = (8.0 / pi) * (8.0 / pi);
constexpr double kDedupTol = 1e-6;

struct Feature {
  double nu;
  double theta;
};

double dist2(const Feature& a, const Feature& b) {
  const double dn = a.nu - b.nu;
  const double dt = theta_distance(a.theta, b.theta);
  return dn * dn + kThetaWeight * dt * dt;
}

struct LloydRun {
  std::vector<Feature> centers;
  double distortion = std::numeric_limits<double>::infinity();
  std::vector<double> history;
};

std::vector<Feature> seed_centers(const std::vector<Feature>& x, const std::vector<double>& w,
                                  int k, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&](const std::vector<double>& mass) -> std::size_t {
    const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
    if (!(total > 0.0)) return static_cast<std::size_t>(unit(rng) * static_cast<double>(x.size())) % x.size();
    double u = unit(rng) * total;
    for (std::size_t i = 0; i < mass.size(); ++i) {
      if (u < mass[i]) return i;
      u -= mass[i];
    }
    for (std::size_t i = mass.size(); i-- > 0;) {
      if (mass[i] > 0.0) return i;
    }
    return 0;
  };
  std::vector<Feature> centers;
  centers.push_back(x[draw(w)]);
  std::vector<double> d2(x.size());
  while (static_cast<int>(centers.size()) < k) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, dist2(x[i], c));
      d2[i] = w[i] * best;
    }
    centers.push_back(x[draw(d2)]);
  }
  return centers;
}

double assign(const std::vector<Feature>& x, const std::vector<double>& w,
              const std::vector<Feature>& centers, std::vector<int>& label) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    int best = 0;
    double bd = dist2(x[i], centers[0]);
    for (std::size_t c = 1; c < centers.size(); ++c) {
      const double d = dist2(x[i], centers[c]);
      if (d < bd) {
        bd = d;
        best = static_cast<int>(c);
      }
    }
    label[i] = best;
    total += w[i] * bd;
  }
  return total;
}

struct Cluster {
  Feature center{0.0, 0.0};
  double cost = 0.0;
  bool empty = true;
};

Cluster fit_cluster(const std::vector<Feature>& x, const std::vector<double>& w,
                    const std::vector<int>& label, int c, int extra = -1, int skip = -1) {
  double wsum = 0.0, nu = 0.0;
  std::vector<double> th, tw;
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const bool in = (label[i] == c && static_cast<int>(i) != skip) || static_cast<int>(i) == extra;
    if (!in) continue;
    members.push_back(i);
    wsum += w[i];
    nu += w[i] * x[i].nu;
    th.push_back(x[i].theta);
    tw.push_back(w[i]);
  }
  Cluster out;
  if (!(wsum > 0.0)) return out;
  out.empty = false;
  out.center = {nu / wsum, circular_centroid(th, tw)};
  for (std::size_t i : members) out.cost += w[i] * dist2(x[i], out.center);
  return out;
}

// One pass of single-sample transfers between clusters, each kept only if it lowers the total
// distortion with both centroids refit. Returns whether anything moved.
bool transfer_pass(const std::vector<Feature>& x, const std::vector<double>& w,
                   std::vector<Feature>& centers, std::vector<int>& label) {
  const int k = static_cast<int>(centers.size());
  std::vector<Cluster> fit(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) fit[static_cast<std::size_t>(c)] = fit_cluster(x, w, label, c);
  bool moved = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(w[i] > 0.0)) continue;
    const int a = label[i];
    const Cluster without = fit_cluster(x, w, label, a, -1, static_cast<int>(i));
    int best_b = -1;
    double best_gain = 1e-12 * (1.0 + fit[static_cast<std::size_t>(a)].cost);
    Cluster best_with;
    for (int b = 0; b < k; ++b) {
      if (b == a) continue;
      const Cluster with = fit_cluster(x, w, label, b, static_cast<int>(i));
      const double gain = fit[static_cast<std::size_t>(a)].cost + fit[static_cast<std::size_t>(b)].cost -
                          without.cost - with.cost;
      if (gain > best_gain) {
        best_gain = gain;
        best_b = b;
        best_with = with;
      }
    }
    if (best_b < 0) continue;
    label[i] = best_b;
    fit[static_cast<std::size_t>(a)] = without;
    fit[static_cast<std::size_t>(best_b)] = best_with;
    moved = true;
  }
  for (int c = 0; c < k; ++c) {
    if (!fit[static_cast<std::size_t>(c)].empty) centers[static_cast<std::size_t>(c)] = fit[static_cast<std::size_t>(c)].center;
  }
  return moved;
}

// Lloyd iterations to a fixed assignment, then transfer passes to leave Lloyd's local minima,
// repeated until neither changes anything.
LloydRun lloyd(const std::vector<Feature>& x, const std::vector<double>& w,
               std::vector<Feature> centers, int max_iters) {
  LloydRun run;
  std::vector<int> label(x.size(), -1);
  std::vector<int> prev;
  double current = assign(x, w, centers, label);
  run.history.push_back(current);
  for (int it = 0; it < max_iters; ++it) {
    for (std::size_t c = 0; c < centers.size(); ++c) {
      const Cluster fit = fit_cluster(x, w, label, static_cast<int>(c));
      if (!fit.empty) centers[c] = fit.center;  // an empty cluster keeps its center
    }
    prev = label;
    current = assign(x, w, centers, label);
    if (label == prev) {
      if (!transfer_pass(x, w, centers, label)) {
        run.history.push_back(current);
        break;
      }
      current = assign(x, w, centers, label);
    }
    run.history.push_back(current);
  }
  run.centers = std::move(centers);
  run.distortion = current;
  return run;
}

}  // namespace

std::vector<ParamSample> collect_params(std::span<const SiklModel> models,
                                        std::span<const std::string> sources) {
  if (models.empty()) throw DomainError("collect_params: no models");
  std::vector<ParamSample> out;
  for (std::size_t m = 0; m < models.size(); ++m) {
    const std::string src = m < sources.size() ? sources[m] : std::to_string(m);
    for (const auto& c : models[m].mixture.components) out.push_back({c.params, c.weight, src});
  }
  return out;
}

double feature_distance2(const GaborParams& a, const GaborParams& b) {
  return dist2({omega_to_nu(a.omega), a.theta}, {omega_to_nu(b.omega), b.theta});
}

double circular_centroid(std::span<const double> thetas, std::span<const double> weights) {
  if (thetas.empty() || thetas.size() != weights.size()) {
    throw DomainError("circular_centroid: need matching, nonempty inputs");
  }
  std::vector<std::size_t> order(thetas.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> t(thetas.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = canonical_theta(thetas[i]);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return t[a] < t[b]; });
  const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(wsum > 0.0)) throw DomainError("circular_centroid: weights sum to zero");

  // The optimum is the weighted mean of the samples unwrapped at some cut point.
  double best_theta = 0.0;
  double best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t cut = 0; cut < order.size(); ++cut) {
    double mean = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r) {
      const std::size_t i = order[r];
      mean += weights[i] * (r < cut ? t[i] + pi : t[i]);
    }
    const double cand = canonical_theta(mean / wsum);
    double cost = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double d = theta_distance(t[i], cand);
      cost += weights[i] * d * d;
    }
    if (cost < best_cost) {
      best_cost = cost;
      best_theta = cand;
    }
  }
  return best_theta;
}

double bank_distortion(std::span<const ParamSample> samples, std::span<const GaborParams> centers,
                       bool weighted) {
  double total = 0.0;
  for (const auto& s : samples) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& c : centers) best = std::min(best, feature_distance2(s.params, c));
    total += (weighted ? s.weight : 1.0) * best;
  }
  return total;
}

FilterBank cluster_kmeans(std::span<const ParamSample> samples, const KMeansOptions& opts,
                          KMeansTrace* trace) {
  if (samples.empty()) throw DomainError("cluster_kmeans: no samples");
  if (opts.k < 1) throw DomainError("cluster_kmeans: k must be >= 1");
  if (opts.restarts < 1) throw DomainError("cluster_kmeans: restarts must be >= 1");
  std::vector<Feature> x;
  std::vector<double> w;
  for (const auto& s : samples) {
    if (!(s.weight >= 0.0)) throw DomainError("cluster_kmeans: negative sample weight");
    x.push_back({omega_to_nu(s.params.omega), s.params.theta});
    w.push_back(opts.weighted ? s.weight : 1.0);
  }
  if (!(std::accumulate(w.begin(), w.end(), 0.0) > 0.0)) {
    GABORIKL_WARN("cluster_kmeans: all sample weights are zero, clustering unweighted");
    std::fill(w.begin(), w.end(), 1.0);
  }

  LloydRun best;
  for (int r = 0; r < opts.restarts; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    LloydRun run = lloyd(x, w, seed_centers(x, w, opts.k, rng), opts.max_iters);
    if (trace != nullptr) trace->distortions.push_back(run.history);
    if (run.distortion < best.distortion) best = std::move(run);
  }

  FilterBank bank;
  std::vector<Feature> kept;
  for (const auto& c : best.centers) {
    const bool dup = std::any_of(kept.begin(), kept.end(), [&](const Feature& o) {
      return std::sqrt(dist2(c, o)) < kDedupTol;
    });
    if (!dup) kept.push_back(c);
  }
  if (static_cast<int>(kept.size()) < opts.k) {
    GABORIKL_WARN("cluster_kmeans: " << opts.k << " centers collapsed to " << kept.size()
                                     << " distinct filters");
  }
  for (const auto& c : kept) bank.filters.push_back(munu_to_params({8.0 * c.theta / pi, c.nu}));
  bank.k = static_cast<int>(bank.filters.size());
  bank.distortion = best.distortion;
  return bank;
}

Eigen::MatrixXd rasterize_filter(const GaborParams& g, int size) {
  if (size < 3 || size % 2 == 0) {
    throw DomainError("rasterize_filter: size must be odd and >= 3, got " + std::to_string(size));
  }
  const int c = size / 2;
  Eigen::MatrixXd r(size, size);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) r(y, x) = eval_gabor(g, double(x - c), double(y - c));
  }
  return r;
}

void export_bank(const FilterBank& bank, int raster_size, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  save_bank(dir / "bank.json", bank);

  for (std::size_t f = 0; f < bank.filters.size(); ++f) {
    const Eigen::MatrixXd r = rasterize_filter(bank.filters[f], raster_size);
    const double lo = r.minCoeff();
    const double hi = r.maxCoeff();
    ImageRegion img;
    img.width = img.height = raster_size;
    img.intensities.resize(static_cast<std::size_t>(raster_size) * raster_size);
    for (int y = 0; y < raster_size; ++y) {
      for (int x = 0; x < raster_size; ++x) {
        img.at(x, y) = hi > lo ? (r(y, x) - lo) / (hi - lo) : 0.5;
      }
    }
    std::ostringstream name;
    name << "filter_" << std::setw(2) << std::setfill('0') << f << ".pgm";
    save_pgm(dir / name.str(), img);
  }

  std::ofstream csv(dir / "params.csv");
  if (!csv) throw IoError("cannot write " + (dir / "params.csv").string());
  csv << "nu,mu,omega,theta\n" << std::setprecision(17);
  for (const auto& g : bank.filters) {
    const MuNuParams m = params_to_munu(g);
    csv << m.nu << ',' << m.mu << ',' << g.omega << ',' << g.theta << '\n';
  }
}

}  // namespace gaborikl
