#include "nsvlmc/checkpoint.hpp"

#include <cstdint>
#include <fstream>

#include <json.hpp>

namespace nsvlmc {

namespace {

constexpr char kMagic[4] = {'N', 'S', 'V', 'C'};
constexpr std::uint32_t kVersion = 1;

using nlohmann::json;

json spec_to_json(const ModelSpec& s) {
  return json{{"variant", variant_name(s.variant)},
              {"q", s.q},
              {"h", s.h},
              {"m_per_latent", s.m_per_latent},
              {"length_scale_init", s.length_scale_init},
              {"output_scale_init", s.output_scale_init},
              {"noise_var_init", s.noise_var_init},
              {"activation", s.activation == Activation::tanh ? "tanh" : "relu"},
              {"variance_mode", s.variance_mode == VarianceTermMode::exact_cross
                                    ? "exact_cross"
                                    : "paper_literal"}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec s;
  s.variant = parse_variant(j.at("variant").get<std::string>());
  s.q = j.at("q").get<Index>();
  s.h = j.at("h").get<Index>();
  s.m_per_latent = j.at("m_per_latent").get<Index>();
  s.length_scale_init = j.at("length_scale_init").get<double>();
  s.output_scale_init = j.at("output_scale_init").get<double>();
  s.noise_var_init = j.at("noise_var_init").get<double>();
  s.activation = j.at("activation").get<std::string>() == "relu" ? Activation::relu
                                                                 : Activation::tanh;
  s.variance_mode = j.at("variance_mode").get<std::string>() == "paper_literal"
                        ? VarianceTermMode::paper_literal
                        : VarianceTermMode::exact_cross;
  return s;
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelState& state,
                     const NormStats& norm, const std::string& config_json) {
  json header;
  header["spec"] = spec_to_json(state.spec);
  header["dims"] = {{"c", state.c}, {"d", state.d}, {"n_train", state.n_train},
                    {"m", state.m}};
  header["norm"] = {{"active", norm.active}};
  if (norm.active) {
    header["norm"]["x_mean"] = std::vector<double>(norm.x_mean.begin(), norm.x_mean.end());
    header["norm"]["x_std"] = std::vector<double>(norm.x_std.begin(), norm.x_std.end());
    header["norm"]["y_mean"] = norm.y_mean;
    header["norm"]["y_std"] = norm.y_std;
  }
  json entries = json::array();
  for (const auto& e : state.params.entries())
    entries.push_back({{"name", e.name}, {"group", e.group}, {"rows", e.rows},
                       {"cols", e.cols}});
  header["entries"] = entries;
  if (!config_json.empty()) header["config"] = json::parse(config_json);

  const std::string head = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw MissingFile("cannot write " + path);
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&kVersion), sizeof(kVersion));
  const std::uint64_t hlen = head.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(head.data(), std::streamsize(hlen));
  const Vec& data = state.params.data();
  out.write(reinterpret_cast<const char*>(data.data()),
            std::streamsize(sizeof(double) * std::size_t(data.size())));
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile("cannot open " + path);
  char magic[4];
  std::uint32_t version = 0;
  std::uint64_t hlen = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (!in || std::string(magic, 4) != std::string(kMagic, 4))
    throw SchemaMismatch(path + ": not a checkpoint file");
  if (version != kVersion)
    throw SchemaMismatch(path + ": unsupported checkpoint version " +
                         std::to_string(version));
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string head(hlen, '\0');
  in.read(head.data(), std::streamsize(hlen));
  const json header = json::parse(head);

  Checkpoint ck;
  const ModelSpec spec = spec_from_json(header.at("spec"));
  const auto& dims = header.at("dims");
  ck.state = make_shell(spec, dims.at("c").get<Index>(), dims.at("d").get<Index>(),
                        dims.at("n_train").get<Index>(), dims.at("m").get<Index>());

  // verify the stored entry table against the reconstructed layout
  const auto& entries = header.at("entries");
  if (entries.size() != ck.state.params.entries().size())
    throw SchemaMismatch(path + ": parameter table mismatch");
  for (size_t i = 0; i < entries.size(); ++i) {
    const auto& e = ck.state.params.entries()[i];
    if (entries[i].at("name").get<std::string>() != e.name ||
        entries[i].at("rows").get<Index>() != e.rows ||
        entries[i].at("cols").get<Index>() != e.cols)
      throw SchemaMismatch(path + ": parameter entry mismatch at " + e.name);
  }

  Vec& data = ck.state.params.data();
  in.read(reinterpret_cast<char*>(data.data()),
          std::streamsize(sizeof(double) * std::size_t(data.size())));
  if (!in) throw SchemaMismatch(path + ": truncated parameter payload");

  const auto& jn = header.at("norm");
  ck.norm.active = jn.at("active").get<bool>();
  if (ck.norm.active) {
    const auto xm = jn.at("x_mean").get<std::vector<double>>();
    const auto xs = jn.at("x_std").get<std::vector<double>>();
    ck.norm.x_mean = Eigen::Map<const Vec>(xm.data(), Index(xm.size()));
    ck.norm.x_std = Eigen::Map<const Vec>(xs.data(), Index(xs.size()));
    ck.norm.y_mean = jn.at("y_mean").get<std::vector<double>>();
    ck.norm.y_std = jn.at("y_std").get<std::vector<double>>();
  }
  if (header.contains("config")) ck.config_json = header.at("config").dump();
  return ck;
}

}  // namespace nsvlmc
