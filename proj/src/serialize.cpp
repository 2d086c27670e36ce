#include "gaborikl/serialize.hpp"

#include <fstream>
#include <iomanip>

#include "gaborikl/errors.hpp"

namespace gaborikl {

using json = nlohmann::json;

void to_json(json& j, const Stabilizer& s) {
  j = json{{"omega_l0", s.omega_l0()},
           {"omega_l1", s.omega_l1()},
           {"omega_u1", s.omega_u1()},
           {"omega_u0", s.omega_u0()}};
}

Stabilizer stabilizer_from_json(const json& j) {
  return Stabilizer(j.at("omega_l0").get<double>(), j.at("omega_l1").get<double>(),
                    j.at("omega_u1").get<double>(), j.at("omega_u0").get<double>());
}

void to_json(json& j, const KernelMixture& m) {
  json comps = json::array();
  for (const auto& c : m.components) {
    comps.push_back({{"omega", c.params.omega}, {"theta", c.params.theta}, {"weight", c.weight}});
  }
  j = json{{"components", comps}, {"stabilizer", m.stabilizer}};
}

void from_json(const json& j, KernelMixture& m) {
  m.components.clear();
  for (const auto& c : j.at("components")) {
    m.components.push_back({c.at("weight").get<double>(),
                            GaborParams::make(c.at("omega").get<double>(), c.at("theta").get<double>())});
  }
  m.stabilizer = j.contains("stabilizer") ? stabilizer_from_json(j.at("stabilizer"))
                                          : Stabilizer::defaults();
}

void to_json(json& j, const SvrConfig& c) {
  j = json{{"epsilon", c.epsilon}, {"C", c.C}, {"kkt_tol", c.kkt_tol}, {"max_iter", c.max_iter}};
}

void from_json(const json& j, SvrConfig& c) {
  c.epsilon = j.value("epsilon", c.epsilon);
  c.C = j.value("C", c.C);
  c.kkt_tol = j.value("kkt_tol", c.kkt_tol);
  c.max_iter = j.value("max_iter", c.max_iter);
}

void to_json(json& j, const SiklConfig& c) {
  j = json{{"svr", c.svr},
           {"stabilizer", c.stabilizer},
           {"grid_nu_steps", c.grid_nu_steps},
           {"grid_theta_steps", c.grid_theta_steps},
           {"refine_iters", c.refine_iters},
           {"violation_tol", c.violation_tol},
           {"violation_tol_relative", c.violation_tol_relative},
           {"max_outer_iters", c.max_outer_iters},
           {"weight_prune_tol", c.weight_prune_tol},
           {"max_master_iters", c.max_master_iters}};
}

void from_json(const json& j, SiklConfig& c) {
  if (j.contains("svr")) j.at("svr").get_to(c.svr);
  if (j.contains("stabilizer")) c.stabilizer = stabilizer_from_json(j.at("stabilizer"));
  c.grid_nu_steps = j.value("grid_nu_steps", c.grid_nu_steps);
  c.grid_theta_steps = j.value("grid_theta_steps", c.grid_theta_steps);
  c.refine_iters = j.value("refine_iters", c.refine_iters);
  c.violation_tol = j.value("violation_tol", c.violation_tol);
  c.violation_tol_relative = j.value("violation_tol_relative", c.violation_tol_relative);
  c.max_outer_iters = j.value("max_outer_iters", c.max_outer_iters);
  c.weight_prune_tol = j.value("weight_prune_tol", c.weight_prune_tol);
  c.max_master_iters = j.value("max_master_iters", c.max_master_iters);
}

json model_to_json(const SiklModel& model, const SiklConfig* config) {
  json support = json::array();
  for (std::size_t i = 0; i < model.train_points.size(); ++i) {
    const double d = model.svr.dual_coef[static_cast<Eigen::Index>(i)];
    if (d == 0.0) continue;
    support.push_back({{"x", model.train_points[i].x}, {"y", model.train_points[i].y}, {"coef", d}});
  }
  json history = json::array();
  for (const auto& h : model.history) {
    history.push_back({{"iteration", h.iteration},
                       {"objective", h.objective},
                       {"max_active_score", h.max_active_score},
                       {"candidate", {{"omega", h.candidate.omega}, {"theta", h.candidate.theta}}},
                       {"candidate_score", h.candidate_score},
                       {"added", h.added},
                       {"active_count", h.active_count}});
  }
  json j{{"mixture", model.mixture},
         {"svr", {{"bias", model.svr.bias}, {"support", support}}},
         {"norm", {{"offset", model.norm.offset}, {"scale", model.norm.scale}}},
         {"width", model.width},
         {"height", model.height},
         {"history", history},
         {"converged", model.converged},
         {"violation_tol", model.violation_tol},
         {"objective", model.objective}};
  if (config != nullptr) j["config"] = *config;
  return j;
}

SiklModel model_from_json(const json& j) {
  SiklModel m;
  m.mixture = j.at("mixture").get<KernelMixture>();
  m.mixture.validate();
  const json& svr = j.at("svr");
  m.svr.bias = svr.at("bias").get<double>();
  const json& support = svr.at("support");
  m.svr.dual_coef = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(support.size()));
  for (std::size_t i = 0; i < support.size(); ++i) {
    const json& s = support[i];
    m.train_points.push_back({s.at("x").get<double>(), s.at("y").get<double>()});
    m.svr.dual_coef[static_cast<Eigen::Index>(i)] = s.at("coef").get<double>();
    m.svr.support.push_back(i);
  }
  if (j.contains("norm")) {
    m.norm.offset = j["norm"].at("offset").get<double>();
    m.norm.scale = j["norm"].at("scale").get<double>();
  }
  m.width = j.value("width", 0);
  m.height = j.value("height", 0);
  if (j.contains("history")) {
    for (const auto& h : j["history"]) {
      SiklIteration it;
      it.iteration = h.at("iteration").get<int>();
      it.objective = h.at("objective").get<double>();
      it.max_active_score = h.at("max_active_score").get<double>();
      it.candidate = GaborParams::make(h.at("candidate").at("omega").get<double>(),
                                       h.at("candidate").at("theta").get<double>());
      it.candidate_score = h.at("candidate_score").get<double>();
      it.added = h.at("added").get<bool>();
      it.active_count = h.at("active_count").get<int>();
      m.history.push_back(it);
    }
  }
  m.converged = j.value("converged", false);
  m.violation_tol = j.value("violation_tol", 0.0);
  m.objective = j.value("objective", 0.0);
  return m;
}

json sparse_to_json(const SparseRepresentation& rep) {
  json kernels = json::array();
  for (const auto& k : rep.kernels) {
    json coeffs = json::array();
    for (const auto& c : k.coeffs) {
      coeffs.push_back({{"x", c.position.x}, {"y", c.position.y}, {"rho", c.rho}});
    }
    kernels.push_back({{"omega", k.params.omega}, {"theta", k.params.theta}, {"coeffs", coeffs}});
  }
  return json{{"bias", rep.bias},
              {"kernels", kernels},
              {"norm", {{"offset", rep.norm.offset}, {"scale", rep.norm.scale}}},
              {"width", rep.width},
              {"height", rep.height},
              {"support_size", rep.support_size},
              {"nonzeros", rep.nonzeros},
              {"sparsity_ratio", rep.sparsity_ratio},
              {"converged", rep.converged}};
}

SparseRepresentation sparse_from_json(const json& j) {
  SparseRepresentation rep;
  rep.bias = j.at("bias").get<double>();
  for (const auto& k : j.at("kernels")) {
    SparseKernel sk;
    sk.params = GaborParams::make(k.at("omega").get<double>(), k.at("theta").get<double>());
    for (const auto& c : k.at("coeffs")) {
      sk.coeffs.push_back({{c.at("x").get<double>(), c.at("y").get<double>()}, c.at("rho").get<double>()});
    }
    rep.nonzeros.push_back(sk.coeffs.size());
    rep.kernels.push_back(std::move(sk));
  }
  if (j.contains("norm")) {
    rep.norm.offset = j["norm"].at("offset").get<double>();
    rep.norm.scale = j["norm"].at("scale").get<double>();
  }
  rep.width = j.value("width", 0);
  rep.height = j.value("height", 0);
  rep.support_size = j.value("support_size", std::size_t{0});
  rep.sparsity_ratio = j.value("sparsity_ratio", 0.0);
  rep.converged = j.value("converged", true);
  return rep;
}

json bank_to_json(const FilterBank& bank) {
  json filters = json::array();
  for (const auto& g : bank.filters) {
    const MuNuParams mn = params_to_munu(g);
    filters.push_back({{"omega", g.omega}, {"theta", g.theta}, {"nu", mn.nu}, {"mu", mn.mu}});
  }
  return json{{"k", bank.k}, {"filters", filters}, {"distortion", bank.distortion}};
}

FilterBank bank_from_json(const json& j) {
  FilterBank bank;
  for (const auto& f : j.at("filters")) {
    bank.filters.push_back(GaborParams::make(f.at("omega").get<double>(), f.at("theta").get<double>()));
  }
  bank.k = j.at("k").get<int>();
  bank.distortion = j.at("distortion").get<double>();
  if (bank.k != static_cast<int>(bank.filters.size())) {
    throw DomainError("bank: k = " + std::to_string(bank.k) + " but " +
                      std::to_string(bank.filters.size()) + " filters listed");
  }
  return bank;
}

json ground_truth_to_json(const SynthImage& synth) {
  json parts = json::array();
  for (const auto& t : synth.truth) {
    const MuNuParams mn = params_to_munu(t.params);
    parts.push_back({{"omega", t.params.omega},
                     {"theta", t.params.theta},
                     {"nu", mn.nu},
                     {"mu", mn.mu},
                     {"center", {{"x", t.center.x}, {"y", t.center.y}}},
                     {"amplitude", t.amplitude}});
  }
  return json{{"width", synth.image.width},
              {"height", synth.image.height},
              {"gabors", parts},
              {"affine", {{"scale", synth.scale}, {"shift", synth.shift}}}};
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

namespace {

template <class F>
auto decode(const std::filesystem::path& path, F&& f) {
  const json j = read_json(path);
  try {
    return f(j);
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": " + e.what());
  } catch (const DomainError& e) {
    throw IoError(path.string() + ": " + e.what());
  }
}

}  // namespace

void save_model(const std::filesystem::path& path, const SiklModel& model, const SiklConfig* config) {
  write_json(path, model_to_json(model, config));
}

SiklModel load_model(const std::filesystem::path& path) { return decode(path, model_from_json); }

void save_sparse(const std::filesystem::path& path, const SparseRepresentation& rep) {
  write_json(path, sparse_to_json(rep));
}

SparseRepresentation load_sparse(const std::filesystem::path& path) {
  return decode(path, sparse_from_json);
}

void save_bank(const std::filesystem::path& path, const FilterBank& bank) {
  write_json(path, bank_to_json(bank));
}

FilterBank load_bank(const std::filesystem::path& path) { return decode(path, bank_from_json); }

void write_profile_csv(const std::filesystem::path& path, const std::vector<ProfileSample>& profile) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "radius,value\n" << std::setprecision(17);
  for (const auto& p : profile) out << p.radius << ',' << p.value << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace gaborikl
