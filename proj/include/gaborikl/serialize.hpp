#pragma once

#include <filesystem>
#include <vector>

#include <json.hpp>

#include "gaborikl/filterbank.hpp"
#include "gaborikl/gabor_kernels.hpp"
#include "gaborikl/imaging.hpp"
#include "gaborikl/sikl.hpp"
#include "gaborikl/sparsify.hpp"

// JSON forms of the pipeline artifacts. Loaders throw IoError naming the path and, for
// malformed input, the parser's byte position.

namespace gaborikl {

void to_json(nlohmann::json& j, const Stabilizer& s);
Stabilizer stabilizer_from_json(const nlohmann::json& j);
void to_json(nlohmann::json& j, const KernelMixture& m);
void from_json(const nlohmann::json& j, KernelMixture& m);
void to_json(nlohmann::json& j, const SvrConfig& c);
void from_json(const nlohmann::json& j, SvrConfig& c);
void to_json(nlohmann::json& j, const SiklConfig& c);
void from_json(const nlohmann::json& j, SiklConfig& c);

/// Only nonzero dual coefficients are stored. After loading, `train_points` holds the
/// support pixels and `svr.dual_coef` is aligned with them.
nlohmann::json model_to_json(const SiklModel& model, const SiklConfig* config = nullptr);
SiklModel model_from_json(const nlohmann::json& j);

nlohmann::json sparse_to_json(const SparseRepresentation& rep);
SparseRepresentation sparse_from_json(const nlohmann::json& j);

nlohmann::json bank_to_json(const FilterBank& bank);
FilterBank bank_from_json(const nlohmann::json& j);

nlohmann::json ground_truth_to_json(const SynthImage& synth);

nlohmann::json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const SiklModel& model,
                const SiklConfig* config = nullptr);
SiklModel load_model(const std::filesystem::path& path);
void save_sparse(const std::filesystem::path& path, const SparseRepresentation& rep);
SparseRepresentation load_sparse(const std::filesystem::path& path);
void save_bank(const std::filesystem::path& path, const FilterBank& bank);
FilterBank load_bank(const std::filesystem::path& path);

/// Header "radius,value".
void write_profile_csv(const std::filesystem::path& path, const std::vector<ProfileSample>& profile);

}  // namespace gaborikl
