#pragma once

#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "bridgepath/errors.hpp"
#include "bridgepath/loss.hpp"
#include "bridgepath/path.hpp"
#include "bridgepath/penalty.hpp"

namespace bridgepath {

using json = nlohmann::json;

/// 17 significant digits: enough for doubles to round-trip through text.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline json vector_to_json(const VectorXd& v) {
  json arr = json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

inline VectorXd vector_from_json(const json& arr) {
  VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Index>(i)] = arr[i].get<double>();
  return v;
}

inline json quadratic_loss_to_json(const QuadraticLSALoss& loss) {
  json j;
  json g = json::array();
  const MatrixXd& m = loss.matrix();
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) g.push_back(m(r, c));
  j["G"] = std::move(g);
  j["theta_tilde"] = vector_to_json(loss.center());
  j["block_sizes"] = loss.layout().sizes();
  return j;
}

inline QuadraticLSALoss quadratic_loss_from_json(const json& j) {
  const VectorXd theta = vector_from_json(j.at("theta_tilde"));
  const Index p = theta.size();
  const json& g = j.at("G");
  require(static_cast<Index>(g.size()) == p * p, "loss JSON: G size does not match theta_tilde");
  MatrixXd m(p, p);
  for (Index r = 0; r < p; ++r)
    for (Index c = 0; c < p; ++c) m(r, c) = g[static_cast<std::size_t>(r * p + c)].get<double>();
  std::vector<Index> sizes;
  for (const auto& s : j.at("block_sizes")) sizes.push_back(s.get<Index>());
  return QuadraticLSALoss(std::move(m), GroupedVector(BlockLayout(std::move(sizes)), theta));
}

inline json penalty_to_json(const PenaltySpec& pen) {
  json j;
  j["lambda"] = pen.lambda();
  json blocks = json::array();
  for (const PenaltyBlock& b : pen.blocks())
    blocks.push_back({{"q", b.q}, {"weights", vector_to_json(b.weights)}});
  j["blocks"] = std::move(blocks);
  return j;
}

inline PenaltySpec penalty_from_json(const json& j) {
  std::vector<PenaltyBlock> blocks;
  for (const auto& b : j.at("blocks"))
    blocks.push_back({b.at("q").get<double>(), vector_from_json(b.at("weights"))});
  return PenaltySpec(std::move(blocks), j.value("lambda", 0.0));
}

/// A problem file bundles a quadratic loss with a penalty template.
struct QuadraticProblem {
  QuadraticLSALoss loss;
  PenaltySpec penalty;
};

inline json problem_to_json(const QuadraticLSALoss& loss, const PenaltySpec& pen) {
  return json{{"loss", quadratic_loss_to_json(loss)}, {"penalty", penalty_to_json(pen)}};
}

inline QuadraticProblem problem_from_json(const json& j) {
  QuadraticProblem p{quadratic_loss_from_json(j.at("loss")), penalty_from_json(j.at("penalty"))};
  require(p.loss.layout().total() == p.penalty.layout().total(),
          "problem JSON: loss and penalty dimensions disagree");
  return p;
}

inline json load_json_file(const std::string& file) {
  std::ifstream in(file);
  require(in.good(), "cannot open " + file);
  json j;
  in >> j;
  return j;
}

inline void write_text_file(const std::string& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  require(out.good(), "cannot write " + file);
  out << text;
}

/// json dumped with double formatting that survives a round trip.
inline void write_json_file(const std::string& file, const json& j) {
  write_text_file(file, j.dump(2) + "\n");
}

/// CSV assembly with fixed 17-significant-digit doubles.
class CsvBuilder {
 public:
  explicit CsvBuilder(std::vector<std::string> header) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (i) out_ << ',';
      out_ << header[i];
    }
    out_ << '\n';
    columns_ = header.size();
  }

  void row(const std::vector<std::string>& cells) {
    require(cells.size() == columns_, "CsvBuilder: wrong cell count");
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

  std::string str() const { return out_.str(); }

 private:
  std::ostringstream out_;
  std::size_t columns_ = 0;
};

inline std::string path_to_csv(const PathResult& path) {
  std::vector<std::string> header{"lambda", "objective", "iterations", "converged"};
  const Index p = path.penalty_template.layout().total();
  for (Index j = 1; j <= p; ++j) header.push_back("theta_" + std::to_string(j));
  CsvBuilder csv(std::move(header));
  for (std::size_t k = 0; k < path.lambdas.size(); ++k) {
    std::vector<std::string> cells{format_double(path.lambdas[k]),
                                   format_double(path.meta[k].objective),
                                   std::to_string(path.meta[k].iterations),
                                   path.meta[k].converged ? "1" : "0"};
    for (Index j = 0; j < p; ++j) cells.push_back(format_double(path.estimates[k].flat()[j]));
    csv.row(cells);
  }
  return csv.str();
}

inline json path_to_json(const PathResult& path) {
  json j;
  j["lambda_max"] = path.lambda_max;
  j["penalty"] = penalty_to_json(path.penalty_template);
  json entries = json::array();
  for (std::size_t k = 0; k < path.lambdas.size(); ++k) {
    json e;
    e["lambda"] = path.lambdas[k];
    e["objective"] = path.meta[k].objective;
    e["iterations"] = path.meta[k].iterations;
    e["converged"] = path.meta[k].converged;
    e["failed"] = path.meta[k].failed;
    if (path.meta[k].failed) e["error"] = path.meta[k].error;
    json blocks = json::array();
    const GroupedVector& est = path.estimates[k];
    for (Index i = 0; i < est.layout().blocks(); ++i)
      blocks.push_back(vector_to_json(est.block(i)));
    e["theta"] = {{"blocks", std::move(blocks)}};
    entries.push_back(std::move(e));
  }
  j["entries"] = std::move(entries);
  return j;
}

/// Per-iteration solver trace: (iter, objective, max_abs_change).
inline std::string trace_to_csv(const SolverResult& res) {
  CsvBuilder csv({"iter", "objective", "max_abs_change"});
  for (std::size_t t = 0; t < res.objective_trace.size(); ++t)
    csv.row({std::to_string(t), format_double(res.objective_trace[t]),
             format_double(res.change_trace[t])});
  return csv.str();
}

}  // namespace bridgepath
