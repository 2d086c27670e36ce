#include "gaborikl/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "gaborikl/errors.hpp"
#include "gaborikl/log.hpp"
#include "gaborikl/serialize.hpp"
#include "gaborikl/sparsify.hpp"

namespace gaborikl::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// Runs one pipeline stage, prefixing any I/O or domain error with the stage name.
template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const IoError& e) {
    throw IoError(name + ": " + e.what());
  } catch (const DomainError& e) {
    throw DomainError(name + ": " + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  if (dir.empty()) return;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void ensure_parent(const fs::path& file) { ensure_dir(file.parent_path()); }

ImageRegion select_region(const ImageRegion& img, const FitArgs& args) {
  if (!args.rect.empty()) {
    if (args.rect.size() != 4) throw DomainError("--rect takes x y w h");
    return extract_region(img, {"rect", args.rect[0], args.rect[1], args.rect[2], args.rect[3]});
  }
  if (args.region.empty()) return img;
  const std::vector<RegionSpec> regions =
      args.regions_file.empty() ? default_face_regions() : load_regions(args.regions_file);
  for (const auto& r : regions) {
    if (r.name == args.region) return extract_region(img, r);
  }
  std::string names;
  for (const auto& r : regions) names += (names.empty() ? "" : ", ") + r.name;
  throw DomainError("no region named '" + args.region + "' (known: " + names + ")");
}

double median(std::vector<double> v) {
  v.erase(std::remove_if(v.begin(), v.end(), [](double x) { return !std::isfinite(x); }), v.end());
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 == 1 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

std::string seed_dir_name(std::uint64_t seed) {
  std::ostringstream s;
  s << "seed_" << std::setw(3) << std::setfill('0') << seed;
  return s.str();
}

}  // namespace

StabilizerArgs::StabilizerArgs() {
  const Stabilizer s = Stabilizer::defaults();
  l0 = s.omega_l0();
  l1 = s.omega_l1();
  u1 = s.omega_u1();
  u0 = s.omega_u0();
}

Stabilizer StabilizerArgs::build() const { return Stabilizer(l0, l1, u1, u0); }

SiklConfig LearnArgs::resolved() const {
  SiklConfig c = sikl;
  c.stabilizer = stab.build();
  c.violation_tol_relative = !absolute_tol;
  c.validate();
  return c;
}

int cmd_fit(const FitArgs& args, std::ostream& out) {
  const SiklConfig cfg = stage("config", [&] { return args.learn.resolved(); });
  const ImageRegion img = stage("load image", [&] { return load_image(args.image); });
  const ImageRegion region = stage("region", [&] { return select_region(img, args); });
  const SiklModel model = stage("fit", [&] {
    return fit_region(region, cfg, args.learn.max_points, args.learn.seed);
  });
  const TerminationReport cert = termination_certificate(model, cfg);
  const Reconstruction rec = reconstruct(model, region.width, region.height, &region);

  stage("write outputs", [&] {
    ensure_dir(args.out);
    save_model(args.out / "model.json", model, &cfg);
    save_pgm(args.out / "reconstruction.pgm", rec.image);
    write_json(args.out / "report.json",
               json{{"rmse", *rec.rmse},
                    {"converged", model.converged},
                    {"components", model.mixture.components.size()},
                    {"support", model.svr.support.size()},
                    {"training_points", model.train_points.size()},
                    {"certificate",
                     {{"gap", cert.gap},
                      {"tolerance", cert.tolerance},
                      {"certified", cert.certified}}}});
  });
  out << "rmse " << *rec.rmse << "\n"
      << "components " << model.mixture.components.size() << "\n"
      << "support " << model.svr.support.size() << "\n"
      << "converged " << (model.converged ? "yes" : "no") << "\n";
  if (!model.converged) {
    GABORIKL_WARN("fit: iteration cap reached; model written to " << (args.out / "model.json").string());
    return kExitCapped;
  }
  return kExitOk;
}

int cmd_sparsify(const SparsifyArgs& args, std::ostream& out) {
  const SiklModel model = stage("load model", [&] { return load_model(args.model); });
  if (!model.converged) GABORIKL_WARN("sparsify: " << args.model.string() << " is not a converged model");
  const SparseRepresentation rep = stage("sparsify", [&] {
    return sparsify_model(model, args.lambda, LassoOptions{args.tol, args.max_sweeps});
  });
  stage("write representation", [&] {
    ensure_parent(args.out);
    save_sparse(args.out, rep);
  });
  if (!args.reconstruction.empty() || !args.overlay.empty()) {
    if (rep.width <= 0 || rep.height <= 0) {
      throw DomainError("render: the model records no raster size");
    }
    const ImageRegion recon = reconstruct_sparse(rep, rep.width, rep.height);
    if (!args.reconstruction.empty()) {
      stage("write reconstruction", [&] {
        ensure_parent(args.reconstruction);
        save_pgm(args.reconstruction, recon);
      });
    }
    if (!args.overlay.empty()) {
      const ImageRegion base =
          args.image.empty() ? recon : stage("load image", [&] { return load_image(args.image); });
      stage("write overlay", [&] {
        ensure_parent(args.overlay);
        save_ppm(args.overlay, base.width, base.height, marker_overlay(base, rep));
      });
    }
  }
  std::size_t total = 0;
  for (auto n : rep.nonzeros) total += n;
  out << "kernels " << rep.kernels.size() << "\n"
      << "nonzeros " << total << "\n"
      << "nonzero_ratio " << rep.sparsity_ratio << "\n"
      << "converged " << (rep.converged ? "yes" : "no") << "\n";
  return rep.converged ? kExitOk : kExitCapped;
}

int cmd_bank(const BankArgs& args, std::ostream& out) {
  std::vector<fs::path> files = stage("list models", [&] {
    if (!fs::is_directory(args.models)) throw IoError(args.models.string() + " is not a directory");
    std::vector<fs::path> found;
    for (const auto& e : fs::recursive_directory_iterator(args.models)) {
      if (!e.is_regular_file() || e.path().extension() != ".json") continue;
      // Reports, sparse codes and banks sit next to models; malformed files still go to the loader.
      std::ifstream in(e.path());
      const json doc = json::parse(in, nullptr, false);
      if (!doc.is_discarded() && !(doc.is_object() && doc.contains("mixture"))) {
        GABORIKL_INFO("bank: skipping " << e.path().string() << " (not a model)");
        continue;
      }
      found.push_back(e.path());
    }
    std::sort(found.begin(), found.end());
    if (found.empty()) throw IoError("no .json models in " + args.models.string());
    return found;
  });
  std::vector<SiklModel> models;
  std::vector<std::string> sources;
  for (const auto& f : files) {
    models.push_back(stage("load model", [&] { return load_model(f); }));
    sources.push_back(fs::relative(f, args.models).generic_string());
  }
  const std::vector<ParamSample> samples = collect_params(models, sources);
  KMeansOptions opts = args.kmeans;
  opts.weighted = !args.unweighted;
  const FilterBank bank = stage("cluster", [&] { return cluster_kmeans(samples, opts); });
  stage("export bank", [&] { export_bank(bank, args.raster_size, args.out); });
  out << "models " << models.size() << "\n"
      << "samples " << samples.size() << "\n"
      << "filters " << bank.k << "\n"
      << "distortion " << bank.distortion << "\n";
  return kExitOk;
}

int cmd_synth(const SynthArgs& args, std::ostream& out) {
  const SynthImage s = stage("synthesize", [&] {
    return synth_gabor_image(args.width, args.height, args.seed, args.ranges);
  });
  fs::path truth = args.truth;
  if (truth.empty()) truth = fs::path(args.out).replace_extension(".json");
  stage("write outputs", [&] {
    ensure_parent(args.out);
    save_pgm(args.out, s.image);
    ensure_parent(truth);
    write_json(truth, ground_truth_to_json(s));
  });
  for (const auto& g : s.truth) {
    const MuNuParams mn = params_to_munu(g.params);
    out << "gabor nu " << mn.nu << " mu " << mn.mu << " center " << g.center.x << " "
        << g.center.y << " amplitude " << g.amplitude << "\n";
  }
  return kExitOk;
}

int cmd_profile(const ProfileArgs& args, std::ostream& out) {
  const SiklModel model = stage("load model", [&] { return load_model(args.model); });
  const std::vector<ProfileSample> prof = stage("profile", [&] {
    return kernel_radial_profile(model.mixture, args.max_radius, args.steps, args.ray_angle);
  });
  stage("write profile", [&] {
    ensure_parent(args.out);
    write_profile_csv(args.out, prof);
    if (!args.angular_out.empty()) {
      std::vector<ProfileSample> ang = prof;
      for (auto& p : ang) p.value = p.angular_mean;
      ensure_parent(args.angular_out);
      write_profile_csv(args.angular_out, ang);
    }
  });
  out << "peak " << prof.front().value << "\n"
      << "total_weight " << model.mixture.total_weight() << "\n";
  return kExitOk;
}

SeedReport reproduce_seed(const ReproduceArgs& args, std::uint64_t seed, const fs::path& dir) {
  SeedReport r;
  r.seed = seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const SiklConfig cfg = stage("config", [&] { return args.learn.resolved(); });
    const SynthImage synth = stage("synthesize", [&] {
      return synth_two_gabor(args.width, args.height, seed, args.ranges);
    });
    const SiklModel model = stage("fit", [&] {
      return fit_region(synth.image, cfg, args.learn.max_points, args.learn.seed);
    });
    const Reconstruction rec = reconstruct(model, args.width, args.height, &synth.image);
    const SparseRepresentation rep = stage("sparsify", [&] { return sparsify_model(model, args.lambda); });
    const ImageRegion sparse_img = reconstruct_sparse(rep, args.width, args.height);

    r.converged = model.converged && rep.converged;
    r.support = model.svr.support.size();
    r.points = model.train_points.size();
    r.kernels = rep.kernels.size();
    for (auto n : rep.nonzeros) r.nonzeros += n;
    r.nonzero_ratio = rep.sparsity_ratio;
    r.sikl_rmse = *rec.rmse;
    r.sparse_rmse = rmse(sparse_img, synth.image);

    for (const auto& t : synth.truth) {
      Recovery rc;
      rc.truth_nu = omega_to_nu(t.params.omega);
      rc.truth_theta = t.params.theta;
      rc.learned_nu = rc.learned_theta = rc.dnu = rc.dtheta = std::numeric_limits<double>::quiet_NaN();
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : model.mixture.components) {
        const double d2 = feature_distance2(t.params, c.params);
        if (d2 < best) {
          best = d2;
          rc.learned_nu = omega_to_nu(c.params.omega);
          rc.learned_theta = c.params.theta;
        }
      }
      if (std::isfinite(best)) {
        rc.dnu = std::fabs(rc.learned_nu - rc.truth_nu);
        rc.dtheta = theta_distance(rc.learned_theta, rc.truth_theta);
      }
      rc.center_distance = std::numeric_limits<double>::quiet_NaN();
      for (const auto& k : rep.kernels) {
        for (const auto& c : k.coeffs) {
          const double dist = std::hypot(c.position.x - t.center.x, c.position.y - t.center.y);
          if (!(dist >= rc.center_distance)) rc.center_distance = dist;
        }
      }
      r.recovery.push_back(rc);
    }

    stage("write outputs", [&] {
      ensure_dir(dir);
      save_pgm(dir / "image.pgm", synth.image);
      write_json(dir / "truth.json", ground_truth_to_json(synth));
      save_model(dir / "model.json", model, &cfg);
      save_pgm(dir / "reconstruction.pgm", rec.image);
      save_sparse(dir / "sparse.json", rep);
      save_pgm(dir / "sparse_reconstruction.pgm", sparse_img);
      save_ppm(dir / "overlay.ppm", args.width, args.height, marker_overlay(synth.image, rep));
    });
    r.ok = true;
  } catch (const std::exception& e) {
    r.error = e.what();
    GABORIKL_ERROR("seed " << seed << ": " << e.what());
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

int cmd_reproduce_synthetic(const ReproduceArgs& args, std::ostream& out) {
  if (args.seeds < 0) throw DomainError("config: --seeds must be >= 0");
  if (args.jobs < 1) throw DomainError("config: --jobs must be >= 1");
  stage("config", [&] {
    (void)args.learn.resolved();
    args.ranges.validate(args.learn.stab.build());
  });
  stage("write outputs", [&] { ensure_dir(args.out); });

  std::vector<SeedReport> reports(static_cast<std::size_t>(args.seeds));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < args.seeds; i = next++) {
      const std::uint64_t seed = args.first_seed + static_cast<std::uint64_t>(i);
      reports[static_cast<std::size_t>(i)] = reproduce_seed(args, seed, args.out / seed_dir_name(seed));
    }
  };
  std::vector<std::thread> pool;
  for (int j = 1; j < std::min(args.jobs, std::max(args.seeds, 1)); ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::vector<double> dnu, dtheta;
  bool failed = false;
  bool capped = false;
  stage("write summary", [&] {
    std::ofstream summary(args.out / "summary.csv");
    std::ofstream recovery(args.out / "recovery.csv");
    if (!summary || !recovery) throw IoError("cannot write summaries under " + args.out.string());
    summary << std::setprecision(10)
            << "seed,status,converged,points,support,support_ratio,kernels,nonzeros,nonzero_ratio,"
               "sikl_rmse,sparse_rmse,seconds\n";
    recovery << std::setprecision(10)
             << "seed,gabor,truth_nu,truth_theta,learned_nu,learned_theta,dnu,dtheta,center_distance\n";
    for (const auto& r : reports) {
      failed = failed || !r.ok;
      capped = capped || (r.ok && !r.converged);
      const double support_ratio = r.points ? double(r.support) / double(r.points) : 0.0;
      summary << r.seed << ',' << (r.ok ? "ok" : "failed") << ',' << int(r.converged) << ','
              << r.points << ',' << r.support << ',' << support_ratio << ',' << r.kernels << ','
              << r.nonzeros << ',' << r.nonzero_ratio << ',' << r.sikl_rmse << ',' << r.sparse_rmse
              << ',' << r.seconds << '\n';
      for (std::size_t g = 0; g < r.recovery.size(); ++g) {
        const Recovery& rc = r.recovery[g];
        recovery << r.seed << ',' << g << ',' << rc.truth_nu << ',' << rc.truth_theta << ','
                 << rc.learned_nu << ',' << rc.learned_theta << ',' << rc.dnu << ',' << rc.dtheta
                 << ',' << rc.center_distance << '\n';
        dnu.push_back(rc.dnu);
        dtheta.push_back(rc.dtheta);
      }
    }
  });
  out << "seeds " << reports.size() << "\n";
  if (!dnu.empty()) {
    out << "median_dnu " << median(dnu) << "\n"
        << "median_dtheta " << median(dtheta) << "\n";
  }
  for (const auto& r : reports) {
    if (!r.ok) out << "seed " << r.seed << " failed: " << r.error << "\n";
  }
  if (failed) return kExitError;
  return capped ? kExitCapped : kExitOk;
}

namespace {

void add_learn_flags(CLI::App& app, LearnArgs& a) {
  app.add_option("--epsilon", a.sikl.svr.epsilon, "SVR tube half-width (normalized intensity)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--C", a.sikl.svr.C, "SVR box bound; inf is capped at 1e12")
      ->check(CLI::PositiveNumber);
  app.add_option("--kkt-tol", a.sikl.svr.kkt_tol, "SVR KKT tolerance")->check(CLI::PositiveNumber);
  app.add_option("--svr-max-iter", a.sikl.svr.max_iter, "SVR pair-update budget")
      ->check(CLI::PositiveNumber);
  app.add_option("--stab-l0", a.stab.l0, "stabilizer lower zero (omega)");
  app.add_option("--stab-l1", a.stab.l1, "stabilizer lower plateau start (omega)");
  app.add_option("--stab-u1", a.stab.u1, "stabilizer upper plateau end (omega)");
  app.add_option("--stab-u0", a.stab.u0, "stabilizer upper zero (omega)");
  app.add_option("--grid-nu-steps", a.sikl.grid_nu_steps, "candidate grid size along nu")
      ->check(CLI::Range(2, 100000));
  app.add_option("--grid-theta-steps", a.sikl.grid_theta_steps, "candidate grid size along theta")
      ->check(CLI::Range(2, 100000));
  app.add_option("--refine-iters", a.sikl.refine_iters, "golden-section refinement sweeps")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--violation-tol", a.sikl.violation_tol,
                 "exchange tolerance; relative to the first master objective unless --absolute-tol")
      ->check(CLI::PositiveNumber);
  app.add_flag("--absolute-tol", a.absolute_tol, "treat --violation-tol as absolute");
  app.add_option("--max-outer-iters", a.sikl.max_outer_iters, "exchange iteration cap")
      ->check(CLI::PositiveNumber);
  app.add_option("--weight-prune-tol", a.sikl.weight_prune_tol, "simplex weights below this are dropped")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--max-master-iters", a.sikl.max_master_iters, "master reduced-gradient cap")
      ->check(CLI::PositiveNumber);
  app.add_option("--max-points", a.max_points, "training pixels kept per region")
      ->check(CLI::Range(std::size_t{2}, std::numeric_limits<std::size_t>::max()));
  app.add_option("--sample-seed", a.seed, "seed for training-pixel subsampling");
}

void add_range_flags(CLI::App& app, SynthRanges& r) {
  app.add_option("--nu-min", r.nu_min, "smallest nu of the synthetic Gabors");
  app.add_option("--nu-max", r.nu_max, "largest nu of the synthetic Gabors");
  app.add_option("--margin", r.margin, "fraction of each side excluded from Gabor centers")
      ->check(CLI::Range(0.0, 0.49));
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stabilized infinite kernel learning of Gabor kernels for images"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.get_formatter()->column_width(36);

  FitArgs fit;
  CLI::App* fit_cmd = app.add_subcommand("fit", "Learn a kernel mixture for an image or region");
  fit_cmd->add_option("--image", fit.image, "input PGM/PPM")->required();
  fit_cmd->add_option("--region", fit.region, "named region (built-in face boxes or --regions)");
  fit_cmd->add_option("--regions", fit.regions_file, "JSON list of regions");
  fit_cmd->add_option("--rect", fit.rect, "explicit region: x y w h")->expected(4);
  fit_cmd->add_option("--out", fit.out, "output directory");
  add_learn_flags(*fit_cmd, fit.learn);

  SparsifyArgs sp;
  CLI::App* sp_cmd = app.add_subcommand("sparsify", "Sparse per-kernel coefficients for a model");
  sp_cmd->add_option("--model", sp.model, "model JSON")->required();
  sp_cmd->add_option("--lambda", sp.lambda, "L1 weight")->check(CLI::NonNegativeNumber);
  sp_cmd->add_option("--tol", sp.tol, "coordinate-descent step tolerance")->check(CLI::PositiveNumber);
  sp_cmd->add_option("--max-sweeps", sp.max_sweeps, "coordinate-descent sweep cap")
      ->check(CLI::PositiveNumber);
  sp_cmd->add_option("--out", sp.out, "sparse representation JSON");
  sp_cmd->add_option("--overlay", sp.overlay, "PPM with coefficient markers");
  sp_cmd->add_option("--reconstruction", sp.reconstruction, "PGM of the sparse reconstruction");
  sp_cmd->add_option("--image", sp.image, "base image for the overlay");

  BankArgs bank;
  CLI::App* bank_cmd = app.add_subcommand("bank", "Cluster learned parameters into a filter bank");
  bank_cmd->add_option("--models", bank.models, "directory of model JSON files")->required();
  bank_cmd->add_option("--k", bank.kmeans.k, "number of filters")->check(CLI::PositiveNumber);
  bank_cmd->add_option("--restarts", bank.kmeans.restarts, "k-means restarts")
      ->check(CLI::PositiveNumber);
  bank_cmd->add_option("--seed", bank.kmeans.seed, "k-means seed");
  bank_cmd->add_option("--max-iters", bank.kmeans.max_iters, "Lloyd iterations per restart")
      ->check(CLI::PositiveNumber);
  bank_cmd->add_option("--raster-size", bank.raster_size, "odd filter raster size")
      ->check(CLI::Range(3, 4095));
  bank_cmd->add_option("--out", bank.out, "output directory");
  bank_cmd->add_flag("--unweighted", bank.unweighted, "ignore mixture weights");

  SynthArgs syn;
  CLI::App* syn_cmd = app.add_subcommand("synth", "Render a random Gabor test image");
  syn_cmd->add_option("--width", syn.width, "image width")->check(CLI::PositiveNumber);
  syn_cmd->add_option("--height", syn.height, "image height")->check(CLI::PositiveNumber);
  syn_cmd->add_option("--seed", syn.seed, "random seed");
  syn_cmd->add_option("--count", syn.ranges.count, "number of Gabors")->check(CLI::PositiveNumber);
  add_range_flags(*syn_cmd, syn.ranges);
  syn_cmd->add_option("--out", syn.out, "output PGM");
  syn_cmd->add_option("--truth", syn.truth, "ground-truth JSON (default: --out with .json)");

  ProfileArgs prof;
  CLI::App* prof_cmd = app.add_subcommand("profile", "Radial profile of a model's mixture");
  prof_cmd->add_option("--model", prof.model, "model JSON")->required();
  prof_cmd->add_option("--out", prof.out, "CSV along the ray");
  prof_cmd->add_option("--max-radius", prof.max_radius, "largest radius in pixels")
      ->check(CLI::NonNegativeNumber);
  prof_cmd->add_option("--steps", prof.steps, "samples along the ray")->check(CLI::Range(2, 1000000));
  prof_cmd->add_option("--ray-angle", prof.ray_angle, "ray direction in radians");
  prof_cmd->add_option("--angular-out", prof.angular_out, "CSV of the angular mean");

  ReproduceArgs rep;
  CLI::App* rep_cmd =
      app.add_subcommand("reproduce-synthetic", "Two-Gabor fit and sparsification over many seeds");
  rep_cmd->add_option("--seeds", rep.seeds, "number of seeds")->check(CLI::NonNegativeNumber);
  rep_cmd->add_option("--first-seed", rep.first_seed, "first seed");
  rep_cmd->add_option("--out", rep.out, "output directory");
  rep_cmd->add_option("--jobs", rep.jobs, "parallel seeds")->check(CLI::PositiveNumber);
  rep_cmd->add_option("--lambda", rep.lambda, "L1 weight")->check(CLI::NonNegativeNumber);
  rep_cmd->add_option("--width", rep.width, "image width")->check(CLI::PositiveNumber);
  rep_cmd->add_option("--height", rep.height, "image height")->check(CLI::PositiveNumber);
  add_range_flags(*rep_cmd, rep.ranges);
  add_learn_flags(*rep_cmd, rep.learn);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit, out);
    if (*sp_cmd) return cmd_sparsify(sp, out);
    if (*bank_cmd) return cmd_bank(bank, out);
    if (*syn_cmd) return cmd_synth(syn, out);
    if (*prof_cmd) return cmd_profile(prof, out);
    if (*rep_cmd) return cmd_reproduce_synthetic(rep, out);
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  } catch (const ConvergenceFailure& e) {
    err << "error: " << e.what() << "\n";
    return kExitCapped;
  }
  return kExitError;
}

}  // namespace gaborikl::cli
