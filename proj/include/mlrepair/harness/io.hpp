#pragma once

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "mlrepair/faultloc.hpp"
#include "mlrepair/minilang/ast.hpp"
#include "mlrepair/minilang/interp.hpp"
#include "mlrepair/patchmodel.hpp"
#include "mlrepair/repair/result.hpp"
#include "mlrepair/testkit.hpp"

namespace mlrepair::harness {

using nlohmann::json;

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CorpusError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw CorpusError("cannot write " + path);
  out << text;
}

// --- Values -----------------------------------------------------------
// {"int": 3} | {"bool": true} | {"array": [1, 2]}

inline json value_to_json(const minilang::Value& v) {
  if (v.is_int()) return json{{"int", v.as_int()}};
  if (v.is_bool()) return json{{"bool", v.as_bool()}};
  if (v.is_array()) return json{{"array", v.as_array()}};
  return json{{"unit", nullptr}};
}

inline minilang::Value value_from_json(const json& j) {
  if (j.contains("int")) return minilang::Value::of_int(j["int"].get<long long>());
  if (j.contains("bool")) return minilang::Value::of_bool(j["bool"].get<bool>());
  if (j.contains("array"))
    return minilang::Value::of_array(j["array"].get<std::vector<long long>>());
  throw CorpusError("bad value literal: " + j.dump());
}

inline json termination_to_json(const minilang::Termination& t) {
  using K = minilang::Termination::Kind;
  switch (t.kind) {
    case K::Normal: return json{{"value", value_to_json(t.value)}};
    case K::FuelExhausted: return json{{"fuel_exhausted", true}};
    case K::RuntimeError: {
      json j{{"error", minilang::err_name(t.err)}};
      if (t.err == minilang::ErrKind::Abort) j["message"] = t.message;
      return j;
    }
  }
  return {};
}

// --- Tests --------------------------------------------------------------

inline testkit::Assertion assertion_from_json(const json& j) {
  minilang::CallSpec call;
  call.fn = j.at("call").at("fn").get<std::string>();
  for (const auto& a : j.at("call").at("args")) call.args.push_back(value_from_json(a));
  const auto& ex = j.at("expect");
  if (ex.contains("error")) {
    auto kind = minilang::err_from_name(ex["error"].get<std::string>());
    if (!kind) throw CorpusError("unknown error kind " + ex["error"].dump());
    return testkit::Assertion::errors(std::move(call), *kind);
  }
  return testkit::Assertion::returns(std::move(call), value_from_json(ex));
}

inline json assertion_to_json(const testkit::Assertion& a) {
  json call{{"fn", a.call.fn}, {"args", json::array()}};
  for (const auto& v : a.call.args) call["args"].push_back(value_to_json(v));
  json expect = a.expects_error ? json{{"error", minilang::err_name(a.expect_err)}}
                                : value_to_json(a.expect_value);
  return json{{"call", call}, {"expect", expect}};
}

inline std::vector<testkit::TestCase> suite_from_json(const json& j) {
  std::vector<testkit::TestCase> suite;
  for (const auto& tj : j.at("tests")) {
    testkit::TestCase t;
    t.name = tj.at("name").get<std::string>();
    for (const auto& aj : tj.at("assertions"))
      t.assertions.push_back(assertion_from_json(aj));
    if (t.assertions.empty())
      throw CorpusError("test " + t.name + " has no assertions");
    suite.push_back(std::move(t));
  }
  return suite;
}

inline json suite_to_json(const std::vector<testkit::TestCase>& suite) {
  json tests = json::array();
  for (const auto& t : suite) {
    json tj{{"name", t.name}, {"assertions", json::array()}};
    for (const auto& a : t.assertions) tj["assertions"].push_back(assertion_to_json(a));
    tests.push_back(std::move(tj));
  }
  return json{{"tests", tests}};
}

// --- Input domains -------------------------------------------------------
// {"int":[lo,hi]} | {"bool":true} | {"array":{"len":[lo,hi],"elem":[lo,hi]}}

inline testkit::ParamDomain domain_from_json(const json& j) {
  if (j.contains("int"))
    return testkit::ParamDomain::int_range(j["int"][0].get<long long>(),
                                           j["int"][1].get<long long>());
  if (j.contains("bool")) return testkit::ParamDomain::any_bool();
  if (j.contains("array")) {
    const auto& a = j["array"];
    return testkit::ParamDomain::array(
        a.at("len")[0].get<long long>(), a.at("len")[1].get<long long>(),
        a.at("elem")[0].get<long long>(), a.at("elem")[1].get<long long>());
  }
  throw CorpusError("bad domain: " + j.dump());
}

inline testkit::InputDomains domains_from_json(const json& j) {
  testkit::InputDomains out;
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::vector<testkit::ParamDomain> doms;
    for (const auto& dj : it.value()) doms.push_back(domain_from_json(dj));
    out[it.key()] = std::move(doms);
  }
  return out;
}

// --- Exports --------------------------------------------------------------

inline json ranking_to_json(const faultloc::Ranking& r) {
  json out = json::array();
  for (const auto& e : r.entries)
    out.push_back(json{{"fn", e.id.fn},
                       {"line", e.line},
                       {"node", e.id.index},
                       {"score", e.score}});
  return out;
}

inline json epc_to_json(const minilang::Program& p, const faultloc::Epc& epc) {
  json chain = json::array();
  for (auto uid : epc.chain)
    chain.push_back(json{{"fn", p.nodes[uid].id.fn}, {"line", p.nodes[uid].line}});
  return json{{"seed",
               json{{"fn", p.nodes[epc.seed].id.fn},
                    {"line", p.nodes[epc.seed].line}}},
              {"test", epc.run},
              {"chain", chain}};
}

inline json patch_to_json(const patchmodel::Patch& patch) {
  json chunks = json::array();
  for (const auto& c : patch.chunks) {
    chunks.push_back(json{{"fn", c.fn},
                          {"line_span", json::array({c.line_lo, c.line_hi})},
                          {"action", patchmodel::action_name(c.action)},
                          {"removed_src", c.removed_src()},
                          {"added_src", c.added_src()}});
  }
  return json{{"base_fingerprint", patch.base_fingerprint}, {"chunks", chunks}};
}

inline json witness_to_json(const repair::WitnessSummary& w) {
  json j{{"location",
          json{{"fn", w.fn}, {"line", w.line}, {"node", w.node_index}}},
         {"mode", w.mode},
         {"schedule", json{{"kind", w.schedule_kind}}},
         {"tests", json::array()}};
  if (w.schedule_kind == "uniform") j["schedule"]["value"] = w.uniform_value;
  if (w.schedule_kind == "per_occurrence") j["schedule"]["sequence"] = w.sequence;
  for (const auto& t : w.tests)
    j["tests"].push_back(json{{"name", t}, {"pass", true}});
  return j;
}

inline json result_to_json(const repair::RepairResult& r,
                           const std::string& strategy) {
  json iters = json::array();
  for (const auto& it : r.iterations)
    iters.push_back(json{{"action", it.action},
                         {"residual_before", it.residual_before},
                         {"residual_after", it.residual_after},
                         {"regressions_after", it.regressions_after}});
  return json{{"status", repair::status_name(r.status)},
              {"strategy", strategy},
              {"initial_failing", r.initial_failing},
              {"iterations", iters},
              {"chunks", r.patch.chunks.size()},
              {"tests_executed", r.tests_executed},
              {"wall_ms", r.wall_ms},
              {"note", r.note}};
}

}  // namespace mlrepair::harness
