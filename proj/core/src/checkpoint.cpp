#include "graphreason/checkpoint.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "graphreason/error.hpp"

namespace graphreason {

using nlohmann::json;

namespace {

struct TensorEntry {
  std::string name;
  const Eigen::MatrixXd* matrix = nullptr;
  Eigen::MatrixXd holder;  // for vectors promoted to n x 1
};

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  std::vector<double> buffer;
  buffer.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      buffer.push_back(m(r, c));
    }
  }
  out.write(reinterpret_cast<const char*>(buffer.data()),
            static_cast<std::streamsize>(buffer.size() * sizeof(double)));
}

Eigen::MatrixXd read_matrix(std::ifstream& in, Eigen::Index rows,
                            Eigen::Index cols, const std::string& name) {
  std::vector<double> buffer(static_cast<std::size_t>(rows) *
                             static_cast<std::size_t>(cols));
  in.read(reinterpret_cast<char*>(buffer.data()),
          static_cast<std::streamsize>(buffer.size() * sizeof(double)));
  if (static_cast<std::size_t>(in.gcount()) !=
      buffer.size() * sizeof(double)) {
    throw Error(ErrorKind::Parse, "checkpoint: short payload for " + name);
  }
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      const double value = buffer[k++];
      if (!std::isfinite(value)) {
        throw Error(ErrorKind::Validation,
                    "checkpoint: non-finite value in " + name);
      }
      m(r, c) = value;
    }
  }
  return m;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path,
                     const Checkpoint& ckpt) {
  ckpt.sage.validate();
  ckpt.proj.validate();

  std::vector<TensorEntry> tensors;
  auto add = [&](std::string name, const Eigen::MatrixXd& m) {
    tensors.push_back({std::move(name), &m, {}});
  };
  auto add_vec = [&](std::string name, const Eigen::VectorXd& v) {
    TensorEntry entry;
    entry.name = std::move(name);
    entry.holder = v;
    tensors.push_back(std::move(entry));
  };

  for (std::size_t l = 0; l < ckpt.sage.layers.size(); ++l) {
    add("sage." + std::to_string(l) + ".w_self", ckpt.sage.layers[l].w_self);
    add("sage." + std::to_string(l) + ".w_neigh", ckpt.sage.layers[l].w_neigh);
  }
  add("proj.weight", ckpt.proj.weight);
  add_vec("proj.bias", ckpt.proj.bias);
  if (ckpt.label_embs) add("label_embs", *ckpt.label_embs);
  if (ckpt.train_state) {
    add("adam.m_weight", ckpt.train_state->m_weight);
    add("adam.v_weight", ckpt.train_state->v_weight);
    add_vec("adam.m_bias", ckpt.train_state->m_bias);
    add_vec("adam.v_bias", ckpt.train_state->v_bias);
  }

  json meta;
  meta["layers"] = ckpt.sage.layers.size();
  meta["activation_after_last"] = ckpt.sage.activation_after_last;
  meta["tokens"] = ckpt.proj.tokens;
  meta["token_dim"] = ckpt.proj.token_dim;
  if (ckpt.train_state) {
    meta["step"] = ckpt.train_state->step;
    meta["lr"] = ckpt.train_state->hyper.lr;
    meta["beta1"] = ckpt.train_state->hyper.beta1;
    meta["beta2"] = ckpt.train_state->hyper.beta2;
    meta["eps"] = ckpt.train_state->hyper.eps;
    meta["seed"] = ckpt.train_state->seed;
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "CKPT v1 tensors=" << tensors.size() << "\n";
  out << "meta " << meta.dump() << "\n";
  for (const auto& entry : tensors) {
    const Eigen::MatrixXd& m = entry.matrix ? *entry.matrix : entry.holder;
    out << "tensor " << entry.name << " " << m.rows() << " " << m.cols()
        << " f64\n";
  }
  for (const auto& entry : tensors) {
    write_matrix(out, entry.matrix ? *entry.matrix : entry.holder);
  }
  if (!out) throw Error(ErrorKind::Io, "short write to " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) {
    throw Error(ErrorKind::Parse, path.string() + ": missing header");
  }
  long tensor_count = -1;
  if (std::sscanf(line.c_str(), "CKPT v1 tensors=%ld", &tensor_count) != 1 ||
      tensor_count < 0) {
    throw Error(ErrorKind::Parse, path.string() + ": bad header '" + line + "'");
  }
  if (!std::getline(in, line) || line.rfind("meta ", 0) != 0) {
    throw Error(ErrorKind::Parse, path.string() + ": missing meta record");
  }
  json meta;
  try {
    meta = json::parse(line.substr(5));
  } catch (const json::exception& ex) {
    throw Error(ErrorKind::Parse, path.string() + ": bad meta: " + ex.what());
  }

  struct TensorHeader {
    std::string name;
    Eigen::Index rows = 0, cols = 0;
  };
  std::vector<TensorHeader> headers;
  for (long i = 0; i < tensor_count; ++i) {
    if (!std::getline(in, line)) {
      throw Error(ErrorKind::Parse, path.string() + ": truncated tensor list");
    }
    std::istringstream fields(line);
    std::string tag, name, dtype;
    long rows = -1, cols = -1;
    fields >> tag >> name >> rows >> cols >> dtype;
    if (tag != "tensor" || rows < 0 || cols < 0 || dtype != "f64") {
      throw Error(ErrorKind::Parse,
                  path.string() + ": bad tensor line '" + line + "'");
    }
    headers.push_back({name, rows, cols});
  }

  std::map<std::string, Eigen::MatrixXd> loaded;
  for (const auto& header : headers) {
    loaded[header.name] = read_matrix(in, header.rows, header.cols, header.name);
  }

  auto take = [&](const std::string& name) {
    auto it = loaded.find(name);
    if (it == loaded.end()) {
      throw Error(ErrorKind::Parse,
                  path.string() + ": missing tensor '" + name + "'");
    }
    Eigen::MatrixXd m = std::move(it->second);
    loaded.erase(it);
    return m;
  };

  Checkpoint ckpt;
  const auto layer_count = meta.at("layers").get<std::size_t>();
  for (std::size_t l = 0; l < layer_count; ++l) {
    SageLayer layer;
    layer.w_self = take("sage." + std::to_string(l) + ".w_self");
    layer.w_neigh = take("sage." + std::to_string(l) + ".w_neigh");
    ckpt.sage.layers.push_back(std::move(layer));
  }
  ckpt.sage.activation_after_last =
      meta.value("activation_after_last", false);
  ckpt.proj.weight = take("proj.weight");
  ckpt.proj.bias = take("proj.bias").col(0);
  ckpt.proj.tokens = meta.at("tokens").get<int>();
  ckpt.proj.token_dim = meta.at("token_dim").get<int>();
  if (loaded.count("label_embs")) ckpt.label_embs = take("label_embs");
  if (loaded.count("adam.m_weight")) {
    TrainState state;
    state.m_weight = take("adam.m_weight");
    state.v_weight = take("adam.v_weight");
    state.m_bias = take("adam.m_bias").col(0);
    state.v_bias = take("adam.v_bias").col(0);
    state.step = meta.value("step", 0L);
    state.hyper.lr = meta.value("lr", state.hyper.lr);
    state.hyper.beta1 = meta.value("beta1", state.hyper.beta1);
    state.hyper.beta2 = meta.value("beta2", state.hyper.beta2);
    state.hyper.eps = meta.value("eps", state.hyper.eps);
    state.seed = meta.value("seed", std::uint64_t{0});
    ckpt.train_state = std::move(state);
  }

  ckpt.sage.validate();
  ckpt.proj.validate();
  return ckpt;
}

void write_loss_curve_csv(const std::filesystem::path& path,
                          const LossCurve& curve) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out << "step,loss\n";
  char row[64];
  for (const auto& [step, loss] : curve) {
    std::snprintf(row, sizeof(row), "%ld,%.9g\n", step, loss);
    out << row;
  }
}

}  // namespace graphreason
