#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "mlrepair/harness/io.hpp"
#include "mlrepair/minilang/parser.hpp"
#include "mlrepair/patchmodel.hpp"
#include "mlrepair/repair/result.hpp"
#include "mlrepair/testkit.hpp"

namespace mlrepair::harness {

namespace fs = std::filesystem;

struct BugMeta {
  std::string id;
  patchmodel::PatchClass expected_class = patchmodel::PatchClass::Other;
  std::vector<faultloc::FaultyLine> faulty_lines;
  testkit::InputDomains domains;
  std::string notes;
};

struct BugEntry {
  std::string dir;
  minilang::Program buggy;
  minilang::Program fixed;
  std::vector<testkit::TestCase> suite;
  BugMeta meta;
  patchmodel::Patch ground_truth;  // ast_diff(buggy, fixed)

  repair::RepairInput repair_input() const {
    repair::RepairInput in;
    in.buggy = buggy;
    in.oracle = fixed;
    in.suite = suite;
    in.domains = meta.domains;
    in.faulty_lines = meta.faulty_lines;
    return in;
  }
};

inline BugMeta meta_from_json(const json& j) {
  BugMeta m;
  m.id = j.at("id").get<std::string>();
  auto cls = patchmodel::patch_class_from_name(
      j.at("expected_class").get<std::string>());
  if (!cls) throw CorpusError("unknown expected_class in meta");
  m.expected_class = *cls;
  for (const auto& fl : j.at("faulty_lines"))
    m.faulty_lines.push_back(
        {fl.at("fn").get<std::string>(), fl.at("line").get<int>()});
  m.domains = domains_from_json(j.at("domains"));
  if (j.contains("notes")) m.notes = j["notes"].get<std::string>();
  return m;
}

// Loads one bug directory (program.ml, fixed.ml, tests.json, meta.json) and
// enforces the corpus invariants: the fixed program passes the suite, the
// buggy one fails at least one test, the ground-truth diff classifies as
// labeled, and every faulty line names an executable statement.
inline BugEntry load_bug(const std::string& dir) {
  BugEntry bug;
  bug.dir = dir;
  for (const char* f : {"program.ml", "fixed.ml", "tests.json", "meta.json"})
    if (!fs::exists(fs::path(dir) / f))
      throw CorpusError(dir + ": missing " + f);

  try {
    bug.buggy = minilang::parse(read_file((fs::path(dir) / "program.ml").string()));
    bug.fixed = minilang::parse(read_file((fs::path(dir) / "fixed.ml").string()));
  } catch (const minilang::ParseError& e) {
    throw CorpusError(dir + ": " + e.what());
  }
  json tests_json = json::parse(read_file((fs::path(dir) / "tests.json").string()));
  bug.suite = suite_from_json(tests_json);
  json meta_json = json::parse(read_file((fs::path(dir) / "meta.json").string()));
  bug.meta = meta_from_json(meta_json);

  auto check_call = [&](const minilang::CallSpec& call, const std::string& in) {
    const auto* f = bug.buggy.find_function(call.fn);
    if (!f) throw CorpusError(dir + ": " + in + " calls unknown function " + call.fn);
    if (f->params.size() != call.args.size())
      throw CorpusError(dir + ": " + in + " calls " + call.fn + " with wrong arity");
    for (size_t i = 0; i < call.args.size(); ++i) {
      const auto& v = call.args[i];
      minilang::Type t = f->params[i].type;
      bool ok = (t == minilang::Type::Int && v.is_int()) ||
                (t == minilang::Type::Bool && v.is_bool()) ||
                (t == minilang::Type::IntArray && v.is_array());
      if (!ok)
        throw CorpusError(dir + ": " + in + " passes a mistyped argument to " +
                          call.fn);
    }
  };
  std::set<std::string> test_names;
  for (const auto& t : bug.suite) {
    if (!test_names.insert(t.name).second)
      throw CorpusError(dir + ": duplicate test name " + t.name);
    for (const auto& a : t.assertions) check_call(a.call, "test " + t.name);
  }

  auto fixed_report = testkit::run_suite(bug.fixed, bug.suite);
  if (fixed_report.failing != 0)
    throw CorpusError(dir + ": fixed.ml fails " +
                      std::to_string(fixed_report.failing) + " test(s)");
  auto buggy_report = testkit::run_suite(bug.buggy, bug.suite);
  if (buggy_report.failing == 0)
    throw CorpusError(dir + ": program.ml passes the whole suite");

  bug.ground_truth = patchmodel::ast_diff(bug.buggy, bug.fixed);
  if (bug.ground_truth.empty())
    throw CorpusError(dir + ": program.ml and fixed.ml are identical");
  auto cls = patchmodel::classify(bug.ground_truth, bug.buggy);
  if (cls != bug.meta.expected_class)
    throw CorpusError(dir + ": label says " +
                      patchmodel::patch_class_name(bug.meta.expected_class) +
                      " but the classifier says " +
                      patchmodel::patch_class_name(cls));

  for (const auto& fl : bug.meta.faulty_lines) {
    if (bug.buggy.unit_at(fl.fn, fl.line) < 0)
      throw CorpusError(dir + ": faulty line " + fl.fn + ":" +
                        std::to_string(fl.line) +
                        " is not an executable statement");
  }
  for (const auto& [fn, doms] : bug.meta.domains) {
    const auto* f = bug.buggy.find_function(fn);
    if (!f) throw CorpusError(dir + ": domains name unknown function " + fn);
    if (f->params.size() != doms.size())
      throw CorpusError(dir + ": domain arity mismatch for " + fn);
    for (size_t i = 0; i < doms.size(); ++i) {
      minilang::Type t = f->params[i].type;
      using K = testkit::ParamDomain::Kind;
      bool ok = (t == minilang::Type::Int && doms[i].kind == K::Int) ||
                (t == minilang::Type::Bool && doms[i].kind == K::Bool) ||
                (t == minilang::Type::IntArray && doms[i].kind == K::Array);
      if (!ok) throw CorpusError(dir + ": domain type mismatch for " + fn);
    }
  }
  return bug;
}

// Bug directories sorted by id.
inline std::vector<std::string> corpus_dirs(const std::string& corpus_dir) {
  std::vector<std::string> dirs;
  if (!fs::is_directory(corpus_dir))
    throw CorpusError(corpus_dir + " is not a directory");
  for (const auto& e : fs::directory_iterator(corpus_dir))
    if (e.is_directory() && fs::exists(e.path() / "meta.json"))
      dirs.push_back(e.path().string());
  std::sort(dirs.begin(), dirs.end());
  return dirs;
}

inline std::vector<BugEntry> load_corpus(const std::string& corpus_dir) {
  std::vector<BugEntry> bugs;
  for (const auto& d : corpus_dirs(corpus_dir)) bugs.push_back(load_bug(d));
  return bugs;
}

}  // namespace mlrepair::harness
