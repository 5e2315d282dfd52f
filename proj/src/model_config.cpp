#include "cssm/config_json.hpp"

#include <algorithm>

namespace cssm {

using nlohmann::json;

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = std::any_of(allowed.begin(), allowed.end(),
                             [&](const char* k) { return it.key() == k; });
    if (!known) throw ConfigError(context + ": unknown key '" + it.key() + "'");
  }
}

namespace {

EBranch e_branch_from(const std::string& s) {
  if (s == "cwt") return EBranch::kCwt;
  if (s == "stft") return EBranch::kStft;
  if (s == "none") return EBranch::kNone;
  throw ConfigError("model.e_branch must be one of cwt|stft|none, got '" + s + "'");
}

ABranch a_branch_from(const std::string& s) {
  if (s == "conv") return ABranch::kConv;
  if (s == "none") return ABranch::kNone;
  throw ConfigError("model.a_branch must be conv|none, got '" + s + "'");
}

CwtFeature cwt_feature_from(const std::string& s) {
  if (s == "magnitude") return CwtFeature::kMagnitude;
  if (s == "real") return CwtFeature::kReal;
  throw ConfigError("model.cwt_feature must be magnitude|real, got '" + s + "'");
}

}  // namespace

ModelConfig model_config_from_json(const json& j) {
  check_keys(j,
             {"electrodes", "time_steps", "fs", "n_classes", "freq_bins", "f_min", "f_max",
              "omega0", "e_branch", "a_branch", "cwt_feature", "enable_wavelet_conv",
              "enable_frequency_ssm", "enable_channel_ssm", "blocks", "state_dim",
              "ffn_expansion", "head_hidden", "ln_eps"},
             "model");
  ModelConfig c;
  if (j.contains("electrodes")) c.electrodes = j.at("electrodes").get<std::size_t>();
  if (j.contains("time_steps")) c.time_steps = j.at("time_steps").get<std::size_t>();
  if (j.contains("fs")) c.fs = j.at("fs").get<double>();
  if (j.contains("n_classes")) c.n_classes = j.at("n_classes").get<std::size_t>();
  if (j.contains("freq_bins")) c.freq_bins = j.at("freq_bins").get<std::size_t>();
  if (j.contains("f_min")) c.f_min = j.at("f_min").get<double>();
  if (j.contains("f_max")) c.f_max = j.at("f_max").get<double>();
  if (j.contains("omega0")) c.omega0 = j.at("omega0").get<double>();
  if (j.contains("e_branch")) c.e_branch = e_branch_from(j.at("e_branch").get<std::string>());
  if (j.contains("a_branch")) c.a_branch = a_branch_from(j.at("a_branch").get<std::string>());
  if (j.contains("cwt_feature")) {
    c.cwt_feature = cwt_feature_from(j.at("cwt_feature").get<std::string>());
  }
  if (j.contains("enable_wavelet_conv")) {
    c.enable_wavelet_conv = j.at("enable_wavelet_conv").get<bool>();
  }
  if (j.contains("enable_frequency_ssm")) {
    c.enable_frequency_ssm = j.at("enable_frequency_ssm").get<bool>();
  }
  if (j.contains("enable_channel_ssm")) {
    c.enable_channel_ssm = j.at("enable_channel_ssm").get<bool>();
  }
  if (j.contains("blocks")) c.blocks = j.at("blocks").get<std::size_t>();
  if (j.contains("state_dim")) c.state_dim = j.at("state_dim").get<std::size_t>();
  if (j.contains("ffn_expansion")) c.ffn_expansion = j.at("ffn_expansion").get<std::size_t>();
  if (j.contains("head_hidden")) c.head_hidden = j.at("head_hidden").get<std::size_t>();
  if (j.contains("ln_eps")) c.ln_eps = j.at("ln_eps").get<double>();
  return c;
}

json model_config_to_json(const ModelConfig& c) {
  json j;
  j["electrodes"] = c.electrodes;
  j["time_steps"] = c.time_steps;
  j["fs"] = c.fs;
  j["n_classes"] = c.n_classes;
  j["freq_bins"] = c.freq_bins;
  j["f_min"] = c.f_min;
  j["f_max"] = c.f_max;
  j["omega0"] = c.omega0;
  j["e_branch"] = c.e_branch == EBranch::kCwt    ? "cwt"
                  : c.e_branch == EBranch::kStft ? "stft"
                                                 : "none";
  j["a_branch"] = c.a_branch == ABranch::kConv ? "conv" : "none";
  j["cwt_feature"] = c.cwt_feature == CwtFeature::kMagnitude ? "magnitude" : "real";
  j["enable_wavelet_conv"] = c.enable_wavelet_conv;
  j["enable_frequency_ssm"] = c.enable_frequency_ssm;
  j["enable_channel_ssm"] = c.enable_channel_ssm;
  j["blocks"] = c.blocks;
  j["state_dim"] = c.state_dim;
  j["ffn_expansion"] = c.ffn_expansion;
  j["head_hidden"] = c.head_hidden;
  j["ln_eps"] = c.ln_eps;
  return j;
}

}  // namespace cssm
