#include <doctest.h>

#include <json.hpp>

#include "gaborikl/errors.hpp"
#include "gaborikl/filterbank.hpp"
#include "gaborikl/serialize.hpp"
#include "gaborikl/sikl.hpp"
#include "gaborikl/sparsify.hpp"
#include "support.hpp"

using namespace gaborikl;

namespace {

SiklModel small_model() {
  SiklConfig cfg;
  cfg.grid_nu_steps = 23;
  cfg.grid_theta_steps = 16;
  SynthRanges r;
  r.nu_min = 2.0;
  r.nu_max = 5.0;
  return fit_region(synth_gabor_image(12, 12, 8, r).image, cfg, 2500, 0);
}

}  // namespace

TEST_SUITE("serialize") {

TEST_CASE("model round trip predicts identically") {
  testing::TempDir dir("ser_model");
  const auto m = small_model();
  SiklConfig cfg;
  save_model(dir / "m.json", m, &cfg);
  const auto back = load_model(dir / "m.json");
  CHECK(back.mixture == m.mixture);
  CHECK(back.svr.bias == m.svr.bias);
  CHECK(back.norm.offset == m.norm.offset);
  CHECK(back.width == m.width);
  CHECK(back.height == m.height);
  CHECK(back.converged == m.converged);
  CHECK(back.history.size() == m.history.size());
  CHECK(back.train_points.size() == m.svr.support.size());
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x) {
      const PixelCoord q{double(x), double(y)};
      CHECK(predict(back, q) == doctest::Approx(predict(m, q)).epsilon(1e-14));
    }
  const auto j = read_json(dir / "m.json");
  CHECK(j.contains("config"));
  SiklConfig cfg_back = j.at("config").get<SiklConfig>();
  CHECK(cfg_back.grid_nu_steps == cfg.grid_nu_steps);
  CHECK(cfg_back.svr.epsilon == cfg.svr.epsilon);
  CHECK(stabilizer_from_json(j.at("mixture").at("stabilizer")) == m.mixture.stabilizer);

  // Saving the reloaded model reproduces the file byte for byte.
  save_model(dir / "m2.json", back, &cfg);
  CHECK(testing::read_text(dir / "m.json") == testing::read_text(dir / "m2.json"));
}

TEST_CASE("sparse and bank round trips") {
  testing::TempDir dir("ser_sparse");
  const auto m = small_model();
  const auto rep = sparsify_model(m, 0.001);
  save_sparse(dir / "s.json", rep);
  const auto back = load_sparse(dir / "s.json");
  CHECK(back.bias == rep.bias);
  CHECK(back.nonzeros == rep.nonzeros);
  CHECK(back.sparsity_ratio == rep.sparsity_ratio);
  CHECK(back.converged == rep.converged);
  REQUIRE(back.kernels.size() == rep.kernels.size());
  for (std::size_t j = 0; j < rep.kernels.size(); ++j) {
    REQUIRE(back.kernels[j].coeffs.size() == rep.kernels[j].coeffs.size());
    for (std::size_t i = 0; i < rep.kernels[j].coeffs.size(); ++i) {
      CHECK(back.kernels[j].coeffs[i].rho == rep.kernels[j].coeffs[i].rho);
      CHECK(back.kernels[j].coeffs[i].position == rep.kernels[j].coeffs[i].position);
    }
  }
  CHECK(reconstruct_sparse(back, 12, 12).intensities == reconstruct_sparse(rep, 12, 12).intensities);

  FilterBank bank;
  bank.filters = {GaborParams::make(0.1234567890123, 3.0), GaborParams::make(2.5, 1e-7)};
  bank.k = 2;
  bank.distortion = 1.0 / 3.0;
  save_bank(dir / "b.json", bank);
  const auto bb = load_bank(dir / "b.json");
  CHECK(bb.filters == bank.filters);
  CHECK(bb.distortion == bank.distortion);
  CHECK(bb.k == 2);
}

TEST_CASE("malformed input") {
  testing::TempDir dir("ser_bad");
  testing::write_bytes(dir / "bad.json", "{\"mixture\": [1, 2,\n");
  try {
    load_model(dir / "bad.json");
    FAIL("expected an I/O error");
  } catch (const IoError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("bad.json") != std::string::npos);
    CHECK(msg.find("line") != std::string::npos);
  }
  testing::write_bytes(dir / "wrong.json", "{\"k\": 3, \"filters\": []}");
  CHECK_THROWS_AS(load_bank(dir / "wrong.json"), IoError);
  testing::write_bytes(dir / "shape.json", "{\"svr\": 5}");
  CHECK_THROWS_AS(load_model(dir / "shape.json"), IoError);
  CHECK_THROWS_AS(load_model(dir / "nothing.json"), IoError);
}

TEST_CASE("ground truth record") {
  const auto s = synth_two_gabor(16, 16, 2);
  const auto j = ground_truth_to_json(s);
  CHECK(j.at("width") == 16);
  REQUIRE(j.at("gabors").size() == 2);
  CHECK(j.at("gabors")[0].at("omega").get<double>() == s.truth[0].params.omega);
  CHECK(j.at("affine").at("scale").get<double>() == s.scale);
}

}
