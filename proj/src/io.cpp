#include "polyfit/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace polyfit {

using nlohmann::json;

std::string format_g17(double x) {
  if (x == 0.0) return "0";  // canonical zero: "-0" does not survive JSON
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

void atomic_write_file(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(target.parent_path(), ec);
  }
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw UsageError("cannot open for writing: " + tmp.string());
    out << content;
    if (!out.good()) throw UsageError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw UsageError("cannot move " + tmp.string() + " to " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool file_exists(const std::string& path) {
  return std::filesystem::exists(path);
}

namespace {

void append_array(std::string& out, const VectorXd& v) {
  out += '[';
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += format_g17(v[i]);
  }
  out += ']';
}

void append_array_rowmajor(std::string& out, const MatrixXd& m) {
  out += '[';
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) {
      if (i || j) out += ',';
      out += format_g17(m(i, j));
    }
  out += ']';
}

void append_net(std::string& out, const Mlp& net) {
  out += "{\"w1\":";
  append_array_rowmajor(out, net.w1);
  out += ",\"b1\":";
  append_array(out, net.b1);
  out += ",\"w2\":";
  append_array_rowmajor(out, net.w2);
  out += ",\"b2\":";
  append_array(out, net.b2);
  out += '}';
}

VectorXd vector_from(const json& j, const std::string& name) {
  if (!j.is_array()) throw UsageError("model document: " + name + " must be an array");
  VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

MatrixXd matrix_from(const json& j, int rows, int cols, const std::string& name) {
  if (!j.is_array() || static_cast<int>(j.size()) != rows * cols)
    throw UsageError("model document: " + name + " must hold " +
                     std::to_string(rows * cols) + " numbers");
  MatrixXd m(rows, cols);
  int k = 0;
  for (int i = 0; i < rows; ++i)
    for (int c = 0; c < cols; ++c) m(i, c) = j[k++].get<double>();
  return m;
}

Mlp net_from(const json& j, int in, int hidden, int out, const std::string& name) {
  Mlp net;
  net.w1 = matrix_from(j.at("w1"), hidden, in, name + ".w1");
  net.b1 = vector_from(j.at("b1"), name + ".b1");
  net.w2 = matrix_from(j.at("w2"), out, hidden, name + ".w2");
  net.b2 = vector_from(j.at("b2"), name + ".b2");
  return net;
}

}  // namespace

std::string write_model_doc(const ModelDocument& model) {
  const Polytope& P = model.polytope;
  std::string out = "{\"schema\":1,\"n\":" + std::to_string(P.dim()) +
                    ",\"M\":" + std::to_string(P.facets()) + ",\"A\":";
  append_array_rowmajor(out, P.A);
  out += ",\"b\":";
  append_array(out, P.b);
  out += ",\"norm\":{\"scale\":";
  append_array(out, P.norm.scale);
  out += ",\"offset\":";
  append_array(out, P.norm.offset);
  out += '}';
  if (model.mlp) {
    const MlpParams& net = *model.mlp;
    out += ",\"mlp\":{\"theta_dim\":" + std::to_string(net.theta_dim) +
           ",\"hidden\":" + std::to_string(net.hidden) + ",\"a_net\":";
    append_net(out, net.a_net);
    out += ",\"b_net\":";
    append_net(out, net.b_net);
    out += ",\"theta_box\":{\"lower\":";
    append_array(out, net.box.lower);
    out += ",\"upper\":";
    append_array(out, net.box.upper);
    out += "}}";
  }
  out += "}\n";
  return out;
}

ModelDocument parse_model_doc(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError(std::string("model document: malformed JSON: ") + e.what());
  }
  try {
    if (!doc.contains("schema") || doc.at("schema") != 1)
      throw UsageError("model document: missing or unsupported schema");
    const int n = doc.at("n").get<int>();
    const int M = doc.at("M").get<int>();
    MatrixXd A = matrix_from(doc.at("A"), M, n, "A");
    VectorXd b = vector_from(doc.at("b"), "b");
    if (b.size() != M) throw UsageError("model document: b has wrong length");
    Normalizer norm;
    norm.scale = vector_from(doc.at("norm").at("scale"), "norm.scale");
    norm.offset = vector_from(doc.at("norm").at("offset"), "norm.offset");

    ModelDocument model{make_polytope(std::move(A), std::move(b), std::move(norm)),
                        std::nullopt};
    if (doc.contains("mlp")) {
      const auto& j = doc.at("mlp");
      MlpParams net;
      net.theta_dim = j.at("theta_dim").get<int>();
      net.hidden = j.at("hidden").get<int>();
      net.facets = M;
      net.dim = n;
      net.a_net = net_from(j.at("a_net"), net.theta_dim, net.hidden, M * n, "a_net");
      net.b_net = net_from(j.at("b_net"), net.theta_dim, net.hidden, M, "b_net");
      net.box.lower = vector_from(j.at("theta_box").at("lower"), "theta_box.lower");
      net.box.upper = vector_from(j.at("theta_box").at("upper"), "theta_box.upper");
      net.norm = model.polytope.norm;
      net.validate();
      model.mlp = std::move(net);
    }
    return model;
  } catch (const json::exception& e) {
    throw UsageError(std::string("model document: ") + e.what());
  }
}

std::string history_csv(const TrainHistory& history) {
  std::string out = "iter,lambda,e_feas,e_opt,loss,grad_norm\n";
  for (const auto& r : history.iters) {
    out += std::to_string(r.iter);
    out += ',';
    out += format_g17(r.lambda);
    out += ',';
    out += format_g17(r.e_feas);
    out += ',';
    out += format_g17(r.e_opt);
    out += ',';
    out += format_g17(r.loss);
    out += ',';
    out += format_g17(r.grad_norm);
    out += '\n';
  }
  return out;
}

std::string eval_csv(const TrainHistory& history) {
  std::string out = "iter,mean_feas,mean_opt,max_feas,max_opt\n";
  for (const auto& r : history.evals) {
    out += std::to_string(r.iter);
    out += ',';
    out += format_g17(r.est.mean_feas);
    out += ',';
    out += format_g17(r.est.mean_opt);
    out += ',';
    out += format_g17(r.est.max_feas);
    out += ',';
    out += format_g17(r.est.max_opt);
    out += '\n';
  }
  return out;
}

}  // namespace polyfit
