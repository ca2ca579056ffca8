/* Copyright 2026 The Rafiki Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "rafiki/config.h"

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"

namespace rafiki {

using json = nlohmann::ordered_json;

absl::StatusOr<RawConfig> ParseIni(const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    return absl::InvalidArgumentError(
        absl::StrCat("ParseError: line ", e.line(), ": ", e.message()));
  }
  RawConfig raw;
  for (const auto& [name, section] : tree) {
    if (section.empty() && !section.data().empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat("ParseError: key '", name, "' outside any section"));
    }
    RawSection s{name, {}};
    for (const auto& [key, value] : section) {
      s.entries.push_back({key, value.data(), 0});
    }
    raw.push_back(std::move(s));
  }
  return raw;
}

namespace {

std::string JsonScalar(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

absl::StatusOr<RawConfig> ParseJsonConfig(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    return absl::InvalidArgumentError(absl::StrCat("ParseError: ", e.what()));
  }
  if (!doc.is_object()) return absl::InvalidArgumentError("ParseError: top level must be an object");
  RawConfig raw;
  for (const auto& [name, section] : doc.items()) {
    if (!section.is_object()) {
      return absl::InvalidArgumentError(
          absl::StrCat("ParseError: section '", name, "' must be an object"));
    }
    RawSection s{name, {}};
    for (const auto& [key, v] : section.items()) {
      if (v.is_array()) {
        std::vector<std::string> parts;
        for (const auto& x : v) {
          if (x.is_structured()) {
            return absl::InvalidArgumentError(
                absl::StrCat("ParseError: ", name, ".", key, ": nested value"));
          }
          parts.push_back(JsonScalar(x));
        }
        s.entries.push_back({key, absl::StrJoin(parts, ","), 0});
      } else if (v.is_object()) {
        return absl::InvalidArgumentError(
            absl::StrCat("ParseError: ", name, ".", key, ": nested object"));
      } else {
        s.entries.push_back({key, JsonScalar(v), 0});
      }
    }
    raw.push_back(std::move(s));
  }
  return raw;
}

absl::Status ApplyOverrides(RawConfig& raw, const std::vector<std::string>& sets) {
  for (const auto& set : sets) {
    const size_t eq = set.find('=');
    const size_t dot = set.rfind('.', eq);
    if (eq == std::string::npos || dot == std::string::npos || dot == 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("override must look like section.key=value: ", set));
    }
    const std::string section = set.substr(0, dot);
    const std::string key = set.substr(dot + 1, eq - dot - 1);
    const std::string value = set.substr(eq + 1);
    auto it = std::find_if(raw.begin(), raw.end(),
                           [&](const RawSection& s) { return s.name == section; });
    if (it == raw.end()) {
      raw.push_back({section, {}});
      it = raw.end() - 1;
    }
    auto e = std::find_if(it->entries.begin(), it->entries.end(),
                          [&](const RawEntry& r) { return r.key == key; });
    if (e == it->entries.end()) {
      it->entries.push_back({key, value, 0});
    } else {
      e->value = value;
    }
  }
  return absl::OkStatus();
}

namespace {

// Typed reads from one section. Problems are appended to `errors`; keys never
// read count as unknown.
class SectionReader {
 public:
  SectionReader(const RawSection* section, std::vector<std::string>* errors)
      : section_(section), errors_(errors) {}

  bool Has(const std::string& key) const { return Find(key) != nullptr; }

  void Str(const std::string& key, std::string& out) {
    if (const RawEntry* e = Find(key)) out = std::string(absl::StripAsciiWhitespace(e->value));
  }

  void Double(const std::string& key, double& out) {
    if (const RawEntry* e = Find(key)) {
      double v;
      if (absl::SimpleAtod(e->value, &v) && std::isfinite(v)) {
        out = v;
      } else {
        Error(*e, "expected a finite number");
      }
    }
  }

  void OptDouble(const std::string& key, std::optional<double>& out) {
    if (Has(key)) {
      double v = 0.0;
      Double(key, v);
      out = v;
    }
  }

  template <typename Int>
  void Integer(const std::string& key, Int& out) {
    if (const RawEntry* e = Find(key)) {
      int64_t v;
      if (absl::SimpleAtoi(e->value, &v)) {
        out = static_cast<Int>(v);
      } else {
        Error(*e, "expected an integer");
      }
    }
  }

  void Unsigned(const std::string& key, uint64_t& out) {
    if (const RawEntry* e = Find(key)) {
      uint64_t v;
      if (absl::SimpleAtoi(e->value, &v)) {
        out = v;
      } else {
        Error(*e, "expected a non-negative integer");
      }
    }
  }

  void Bool(const std::string& key, bool& out) {
    if (const RawEntry* e = Find(key)) {
      bool v;
      if (absl::SimpleAtob(e->value, &v)) {
        out = v;
      } else {
        Error(*e, "expected true or false");
      }
    }
  }

  void StrList(const std::string& key, std::vector<std::string>& out) {
    if (const RawEntry* e = Find(key)) out = SplitList(e->value);
  }

  void IntList(const std::string& key, std::vector<int>& out) {
    if (const RawEntry* e = Find(key)) {
      std::vector<int> v;
      for (const auto& part : SplitList(e->value)) {
        int x;
        if (!absl::SimpleAtoi(part, &x)) {
          Error(*e, "expected a list of integers");
          return;
        }
        v.push_back(x);
      }
      out = std::move(v);
    }
  }

  void Fail(const std::string& key, const std::string& msg) {
    errors_->push_back(absl::StrCat(name(), ".", key, ": ", msg));
  }

  void ReportUnknown() {
    if (section_ == nullptr) return;
    for (const auto& e : section_->entries) {
      if (!used_.count(e.key)) Error(e, "unknown key");
    }
  }

  std::string name() const { return section_ ? section_->name : ""; }
  const RawSection* section() const { return section_; }

  static std::vector<std::string> SplitList(const std::string& value) {
    std::vector<std::string> out;
    for (absl::string_view part : absl::StrSplit(value, ',', absl::SkipWhitespace())) {
      out.emplace_back(absl::StripAsciiWhitespace(part));
    }
    return out;
  }

 private:
  const RawEntry* Find(const std::string& key) const {
    if (section_ == nullptr) return nullptr;
    for (const auto& e : section_->entries) {
      if (e.key == key) {
        used_.insert(key);
        return &e;
      }
    }
    return nullptr;
  }

  void Error(const RawEntry& e, const std::string& msg) {
    std::string where = absl::StrCat(name(), ".", e.key);
    if (e.line > 0) where = absl::StrCat("line ", e.line, ": ", where);
    errors_->push_back(absl::StrCat(where, ": ", msg, " (got '", e.value, "')"));
  }

  const RawSection* section_;
  std::vector<std::string>* errors_;
  mutable std::set<std::string> used_;
};

KnobValue ParseKnobValue(const std::string& s) {
  int64_t i;
  if (absl::SimpleAtoi(s, &i)) return i;
  double d;
  if (absl::SimpleAtod(s, &d)) return d;
  return s;
}

void ReadKnob(SectionReader& r, const std::string& name, std::vector<KnobDef>& out,
              std::vector<std::string>& errors) {
  std::string type = "range";
  r.Str("type", type);
  KnobDef knob;
  knob.name = name;
  r.StrList("depends", knob.depends);
  if (r.Has("post_hook")) {
    std::string h;
    r.Str("post_hook", h);
    knob.post_hook = h;
  }
  if (r.Has("pre_hook")) {
    std::string h;
    r.Str("pre_hook", h);
    knob.pre_hook = h;
  }
  if (type == "range") {
    RangeDomain d;
    std::string dtype = "float";
    r.Double("min", d.min);
    r.Double("max", d.max);
    r.Str("dtype", dtype);
    r.Bool("log", d.log_scale);
    auto dt = ParseDType(dtype);
    if (!dt.ok()) {
      r.Fail("dtype", std::string(dt.status().message()));
      return;
    }
    auto def = DefineRange(name, d.min, d.max, *dt, knob.depends, knob.post_hook,
                           d.log_scale);
    if (!def.ok()) {
      errors.push_back(absl::StrCat(r.name(), ": ", std::string(def.status().message())));
      return;
    }
    def->pre_hook = knob.pre_hook;
    out.push_back(*std::move(def));
  } else if (type == "choice") {
    std::vector<std::string> values;
    r.StrList("values", values);
    std::vector<KnobValue> parsed;
    for (const auto& v : values) parsed.push_back(ParseKnobValue(v));
    auto def = DefineChoice(name, parsed, knob.depends, knob.post_hook);
    if (!def.ok()) {
      errors.push_back(absl::StrCat(r.name(), ": ", std::string(def.status().message())));
      return;
    }
    def->pre_hook = knob.pre_hook;
    out.push_back(*std::move(def));
  } else {
    r.Fail("type", absl::StrCat("must be range or choice, got '", type, "'"));
  }
}

bool ReadModel(SectionReader& r, const std::string& name, const std::vector<int>& bs,
               ModelProfile& m) {
  m.name = name;
  m.family = name;
  r.Str("family", m.family);
  r.Str("task", m.task);
  r.Double("accuracy", m.accuracy);
  r.Double("memory_mb", m.memory_mb);
  if (r.Has("latency")) {
    std::string text;
    r.Str("latency", text);
    m.latency.clear();
    for (const auto& row : SectionReader::SplitList(text)) {
      std::vector<std::string> kv = absl::StrSplit(row, ':');
      int b;
      double c;
      if (kv.size() != 2 || !absl::SimpleAtoi(kv[0], &b) || !absl::SimpleAtod(kv[1], &c)) {
        r.Fail("latency", absl::StrCat("rows must be b:seconds, got '", row, "'"));
        return false;
      }
      m.latency.emplace_back(b, c);
    }
  } else {
    double c_first = 0.0, c_last = 0.0;
    if (!r.Has("c_first") || !r.Has("c_last")) {
      r.Fail("latency", "give latency rows or c_first and c_last");
      return false;
    }
    r.Double("c_first", c_first);
    r.Double("c_last", c_last);
    m.latency = InterpolatedProfile(name, m.family, m.accuracy, m.memory_mb, bs, c_first,
                                    c_last)
                    .latency;
  }
  if (auto s = m.Validate(); !s.ok()) {
    r.Fail("latency", std::string(s.message()));
    return false;
  }
  return true;
}

const RawSection* FindSection(const RawConfig& raw, const std::string& name) {
  for (const auto& s : raw) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

}  // namespace

absl::StatusOr<RunConfig> BuildRunConfig(const RawConfig& raw) {
  RunConfig c;
  std::vector<std::string> errors;
  static const std::set<std::string> kFixed = {"run",      "study", "task",     "advisor",
                                               "models",   "ensemble", "rl", "workload",
                                               "output"};
  std::set<std::string> seen;
  for (const auto& s : raw) {
    if (!seen.insert(s.name).second) errors.push_back(absl::StrCat("duplicate section [", s.name, "]"));
    if (!kFixed.count(s.name) && s.name.rfind("space.", 0) != 0 &&
        s.name.rfind("model.", 0) != 0) {
      errors.push_back(absl::StrCat("unknown section [", s.name, "]"));
    }
  }
  std::vector<SectionReader> readers;
  auto reader = [&](const std::string& name) -> SectionReader& {
    readers.emplace_back(FindSection(raw, name), &errors);
    return readers.back();
  };
  readers.reserve(raw.size() + kFixed.size());

  {
    SectionReader& r = reader("run");
    r.Unsigned("seed", c.seed);
    r.Integer("seeds", c.seeds);
    if (c.seeds < 1) r.Fail("seeds", "must be >= 1");
  }
  {
    SectionReader& r = reader("study");
    std::string mode(StudyModeName(c.tune.mode));
    r.Str("mode", mode);
    if (auto m = ParseStudyMode(mode); m.ok()) {
      c.tune.mode = *m;
    } else {
      r.Fail("mode", std::string(m.status().message()));
    }
    auto& st = c.tune.study;
    r.Integer("max_trials", st.max_trials);
    r.Integer("workers", c.tune.workers);
    r.Double("delta", st.delta);
    r.Integer("patience", st.patience);
    r.Double("min_improve", st.min_improve);
    r.OptDouble("max_seconds", st.max_seconds);
    r.OptDouble("target_p", st.target_p);
    r.Double("alpha0", st.alpha.alpha0);
    std::string kind = st.alpha.kind == AlphaSchedule::Kind::kExponential ? "exponential" : "linear";
    r.Str("alpha_kind", kind);
    if (auto k = ParseAlphaKind(kind); k.ok()) {
      st.alpha.kind = *k;
    } else {
      r.Fail("alpha_kind", std::string(k.status().message()));
    }
    r.Double("alpha_rate", st.alpha.rate);
    r.Double("alpha_step", st.alpha.step);
    r.Double("alpha_floor", st.alpha.floor);
    r.Str("store_ns", c.tune.store_ns);
    r.Str("listen", c.tune.listen);
    r.IntList("workers_sweep", c.workers_sweep);
    if (st.max_trials < 1) r.Fail("max_trials", "must be >= 1");
    if (c.tune.workers < 1) r.Fail("workers", "must be >= 1");
    if (st.patience < 1) r.Fail("patience", "must be >= 1");
    if (!(st.alpha.alpha0 >= 0.0 && st.alpha.alpha0 <= 1.0)) r.Fail("alpha0", "must be in [0,1]");
    for (int w : c.workers_sweep) {
      if (w < 1) r.Fail("workers_sweep", "entries must be >= 1");
    }
  }
  {
    SectionReader& r = reader("task");
    auto& t = c.tune.task;
    r.Double("p_cap", t.p_cap);
    r.Double("kappa_min", t.kappa_min);
    r.Double("kappa_max", t.kappa_max);
    r.Double("noise_sd", t.noise_sd);
    r.Double("lambda", t.lambda);
    r.Double("range_width", t.range_width);
    r.Double("choice_width", t.choice_width);
    r.Double("epoch_seconds", t.epoch_seconds);
    r.Integer("max_epochs", t.max_epochs);
    r.StrList("arch_knobs", c.tune.arch_knobs);
    if (!(t.p_cap > 0.0 && t.p_cap <= 1.0)) r.Fail("p_cap", "must be in (0,1]");
    if (t.max_epochs < 1) r.Fail("max_epochs", "must be >= 1");
    if (!(t.range_width > 0.0) || !(t.choice_width > 0.0)) r.Fail("range_width", "widths must be > 0");
    if (!(t.epoch_seconds > 0.0)) r.Fail("epoch_seconds", "must be > 0");
    if (t.noise_sd < 0.0) r.Fail("noise_sd", "must be >= 0");
  }
  {
    SectionReader& r = reader("advisor");
    std::string kind = c.tune.advisor == AdvisorKind::kRandom ? "random" : "bayes";
    r.Str("kind", kind);
    if (auto k = ParseAdvisorKind(kind); k.ok()) {
      c.tune.advisor = *k;
    } else {
      r.Fail("kind", std::string(k.status().message()));
    }
    auto& b = c.tune.bayes;
    r.Integer("n_init", b.n_init);
    r.Integer("n_cand", b.n_cand);
    r.Double("lengthscale", b.gp.lengthscale);
    r.Double("signal_var", b.gp.signal_var);
    r.Double("noise_var", b.gp.noise_var);
    r.Bool("standardize", b.gp.standardize);
    if (b.n_init < 1) r.Fail("n_init", "must be >= 1");
    if (b.n_cand < 1) r.Fail("n_cand", "must be >= 1");
    if (!(b.gp.lengthscale > 0.0)) r.Fail("lengthscale", "must be > 0");
  }
  {
    std::vector<KnobDef> knobs;
    for (const auto& s : raw) {
      if (s.name.rfind("space.", 0) != 0) continue;
      SectionReader& r = reader(s.name);
      ReadKnob(r, s.name.substr(6), knobs, errors);
    }
    if (!knobs.empty()) c.space = std::move(knobs);
    for (const auto& v : Validate(c.space, HookRegistry::WithBuiltins())) {
      errors.push_back(absl::StrCat("space: ", v.message));
    }
    for (const auto& a : c.tune.arch_knobs) {
      if (std::none_of(c.space.begin(), c.space.end(),
                       [&](const KnobDef& k) { return k.name == a; })) {
        if (a != "n_conv" && a != "width" && a != "kernel") {
          errors.push_back(absl::StrCat("task.arch_knobs: unknown knob '", a, "'"));
        }
      }
    }
  }
  {
    SectionReader& r = reader("workload");
    auto& s = c.serve;
    std::string anchor = s.anchor == RateAnchor::kMax ? "max" : "min";
    r.Str("dispatcher", s.dispatcher);
    r.Str("anchor", anchor);
    if (auto a = ParseRateAnchor(anchor); a.ok()) {
      s.anchor = *a;
    } else {
      r.Fail("anchor", std::string(a.status().message()));
    }
    r.Double("tau", s.batching.tau);
    s.batching.delta = 0.1 * s.batching.tau;
    r.Double("delta", s.batching.delta);
    r.IntList("batch_sizes", s.batching.batch_sizes);
    r.Double("period", s.workload.period);
    r.Double("duration", s.workload.duration);
    r.Double("window", s.workload.window);
    r.Double("dt", s.workload.dt);
    r.Integer("queue_capacity", s.workload.queue_capacity);
    r.Double("noise_sd", s.workload.noise_sd);
    static const std::set<std::string> kDispatchers = {"greedy", "sync", "async", "rl"};
    if (!kDispatchers.count(s.dispatcher)) {
      r.Fail("dispatcher", absl::StrCat("must be greedy, sync, async or rl, got '",
                                        s.dispatcher, "'"));
    }
    if (!(s.batching.tau > 0.0)) r.Fail("tau", "must be > 0");
    if (s.batching.delta < 0.0) r.Fail("delta", "must be >= 0");
    const auto& bs = s.batching.batch_sizes;
    if (bs.empty() || bs.front() < 1 || !std::is_sorted(bs.begin(), bs.end()) ||
        std::adjacent_find(bs.begin(), bs.end()) != bs.end()) {
      r.Fail("batch_sizes", "must be strictly ascending positive integers");
    }
    if (s.workload.noise_sd < 0.0) r.Fail("noise_sd", "must be >= 0");
  }
  {
    SectionReader& r = reader("models");
    r.Str("preset", c.model_preset);
    r.StrList("list", c.model_list);
    std::vector<ModelProfile> models;
    if (c.model_list.empty()) {
      if (c.model_preset == "trio") {
        models = ServingTrio();
      } else if (c.model_preset == "single") {
        models = {SingleModelProfile()};
      } else {
        r.Fail("preset", absl::StrCat("must be trio or single, got '", c.model_preset, "'"));
      }
      for (const auto& s : raw) {
        if (s.name.rfind("model.", 0) == 0) {
          errors.push_back(absl::StrCat("[", s.name, "] is not named in models.list"));
        }
      }
    } else {
      std::set<std::string> named;
      for (const auto& name : c.model_list) {
        if (!named.insert(name).second) r.Fail("list", absl::StrCat("duplicate model '", name, "'"));
        const RawSection* sec = FindSection(raw, "model." + name);
        if (sec == nullptr) {
          r.Fail("list", absl::StrCat("no [model.", name, "] section for '", name, "'"));
          continue;
        }
        SectionReader& mr = reader(sec->name);
        ModelProfile m;
        if (ReadModel(mr, name, c.serve.batching.batch_sizes, m)) models.push_back(std::move(m));
      }
      for (const auto& s : raw) {
        if (s.name.rfind("model.", 0) == 0 && !named.count(s.name.substr(6))) {
          errors.push_back(absl::StrCat("[", s.name, "] is not named in models.list"));
        }
      }
    }
    if (models.size() > 8) r.Fail("list", "at most 8 models");
    c.serve.models = std::move(models);
  }
  {
    SectionReader& r = reader("ensemble");
    std::string table = "derive";
    r.Str("table", table);
    r.Unsigned("seed", c.serve.table_seed);
    r.Integer("examples", c.serve.vote.num_examples);
    r.Integer("labels", c.serve.vote.num_labels);
    r.Double("rho", c.serve.vote.rho);
    if (c.serve.vote.num_examples < 1) r.Fail("examples", "must be >= 1");
    if (c.serve.vote.num_labels < 2 || c.serve.vote.num_labels > 255) r.Fail("labels", "must be in [2,255]");
    if (!(c.serve.vote.rho >= 0.0 && c.serve.vote.rho <= 1.0)) r.Fail("rho", "must be in [0,1]");
    const auto& models = c.serve.models;
    std::map<std::string, size_t> index;
    for (size_t i = 0; i < models.size(); ++i) index[models[i].name] = i;
    if (table == "explicit") {
      c.serve.table.assign(size_t{1} << models.size(), 0.0);
      std::vector<bool> given(c.serve.table.size(), false);
      if (const RawSection* sec = r.section()) {
        for (const auto& e : sec->entries) {
          if (e.key.rfind("acc.", 0) != 0) continue;
          uint32_t mask = 0;
          bool ok = true;
          for (const auto& member : absl::StrSplit(e.key.substr(4), '+')) {
            auto it = index.find(std::string(member));
            if (it == index.end()) {
              r.Fail(e.key, absl::StrCat("unknown model '", std::string(member), "'"));
              ok = false;
              break;
            }
            mask |= 1u << it->second;
          }
          double v = 0.0;
          r.Double(e.key, v);
          if (ok && (v < 0.0 || v > 1.0)) r.Fail(e.key, "accuracy must be in [0,1]");
          if (ok && mask != 0) {
            c.serve.table[mask] = v;
            given[mask] = true;
          }
        }
      }
      for (uint32_t mask = 1; mask < c.serve.table.size(); ++mask) {
        if (given[mask]) continue;
        if (MaskSize(mask) == 1) {
          c.serve.table[mask] = models[std::countr_zero(mask)].accuracy;
        } else {
          std::vector<std::string> names;
          for (size_t i = 0; i < models.size(); ++i) {
            if (mask & (1u << i)) names.push_back(models[i].name);
          }
          r.Fail("table", absl::StrCat("missing acc.", absl::StrJoin(names, "+")));
        }
      }
    } else if (table != "derive") {
      r.Fail("table", absl::StrCat("must be derive or explicit, got '", table, "'"));
    } else if (const RawSection* sec = r.section()) {
      for (const auto& e : sec->entries) {
        if (e.key.rfind("acc.", 0) == 0) r.Fail(e.key, "explicit entry with table = derive");
      }
    }
  }
  {
    SectionReader& r = reader("rl");
    auto& rl = c.serve.rl;
    r.Integer("queue_len", rl.queue_len);
    r.Integer("hidden", rl.hidden);
    r.Double("gamma", rl.gamma);
    r.Double("lr_policy", rl.lr_policy);
    r.Double("lr_value", rl.lr_value);
    r.Double("momentum", rl.momentum);
    r.Double("beta", rl.beta);
    r.Double("return_scale", rl.return_scale);
    r.Bool("normalize_advantage", rl.normalize_advantage);
    r.Double("max_grad_norm", rl.max_grad_norm);
    r.Integer("train_episodes", rl.train_episodes);
    if (rl.queue_len < 1) r.Fail("queue_len", "must be >= 1");
    if (rl.hidden < 1) r.Fail("hidden", "must be >= 1");
    if (!(rl.gamma >= 0.0 && rl.gamma < 1.0)) r.Fail("gamma", "must be in [0,1)");
    if (rl.beta < 0.0) r.Fail("beta", "must be >= 0");
    if (rl.train_episodes < 0) r.Fail("train_episodes", "must be >= 0");
    if (!(rl.momentum >= 0.0 && rl.momentum < 1.0)) r.Fail("momentum", "must be in [0,1)");
  }
  {
    SectionReader& r = reader("output");
    r.Str("dir", c.out_dir);
    r.Bool("trace", c.trace);
  }
  for (auto& r : readers) r.ReportUnknown();
  if (!errors.empty()) {
    return absl::InvalidArgumentError(
        absl::StrCat("ValidationError: ", absl::StrJoin(errors, "; ")));
  }
  return c;
}

absl::StatusOr<RunConfig> LoadConfigText(const std::string& text,
                                         const std::vector<std::string>& sets) {
  const size_t first = text.find_first_not_of(" \t\r\n");
  auto raw = (first != std::string::npos && text[first] == '{') ? ParseJsonConfig(text)
                                                               : ParseIni(text);
  if (!raw.ok()) return raw.status();
  if (auto s = ApplyOverrides(*raw, sets); !s.ok()) return s;
  return BuildRunConfig(*raw);
}

absl::StatusOr<RunConfig> LoadConfig(const std::string& path,
                                     const std::vector<std::string>& sets) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot read config ", path));
  std::stringstream ss;
  ss << in.rdbuf();
  return LoadConfigText(ss.str(), sets);
}

namespace {

json KnobValueJson(const KnobValue& v) {
  return std::visit([](const auto& x) { return json(x); }, v);
}

}  // namespace

std::string EchoConfig(const RunConfig& c) {
  json j;
  j["run"] = {{"seed", c.seed}, {"seeds", c.seeds}};
  const auto& st = c.tune.study;
  json study = {{"mode", std::string(StudyModeName(c.tune.mode))},
                {"max_trials", st.max_trials},
                {"workers", c.tune.workers},
                {"delta", st.delta},
                {"patience", st.patience},
                {"min_improve", st.min_improve},
                {"alpha0", st.alpha.alpha0},
                {"alpha_kind",
                 st.alpha.kind == AlphaSchedule::Kind::kExponential ? "exponential" : "linear"},
                {"alpha_rate", st.alpha.rate},
                {"alpha_step", st.alpha.step},
                {"alpha_floor", st.alpha.floor},
                {"store_ns", c.tune.store_ns},
                {"listen", c.tune.listen},
                {"workers_sweep", c.workers_sweep}};
  if (st.max_seconds) study["max_seconds"] = *st.max_seconds;
  if (st.target_p) study["target_p"] = *st.target_p;
  j["study"] = study;
  const auto& t = c.tune.task;
  j["task"] = {{"p_cap", t.p_cap},
               {"kappa_min", t.kappa_min},
               {"kappa_max", t.kappa_max},
               {"noise_sd", t.noise_sd},
               {"lambda", t.lambda},
               {"range_width", t.range_width},
               {"choice_width", t.choice_width},
               {"epoch_seconds", t.epoch_seconds},
               {"max_epochs", t.max_epochs},
               {"arch_knobs", c.tune.arch_knobs}};
  const auto& b = c.tune.bayes;
  j["advisor"] = {{"kind", c.tune.advisor == AdvisorKind::kRandom ? "random" : "bayes"},
                  {"n_init", b.n_init},
                  {"n_cand", b.n_cand},
                  {"lengthscale", b.gp.lengthscale},
                  {"signal_var", b.gp.signal_var},
                  {"noise_var", b.gp.noise_var},
                  {"standardize", b.gp.standardize}};
  for (const auto& k : c.space) {
    json kj;
    if (const auto* r = std::get_if<RangeDomain>(&k.domain)) {
      kj = {{"type", "range"},
            {"min", r->min},
            {"max", r->max},
            {"dtype", std::string(DTypeName(r->dtype))},
            {"log", r->log_scale}};
    } else {
      json values = json::array();
      for (const auto& v : std::get<ChoiceDomain>(k.domain).values) values.push_back(KnobValueJson(v));
      kj = {{"type", "choice"}, {"values", values}};
    }
    if (!k.depends.empty()) kj["depends"] = k.depends;
    if (k.post_hook) kj["post_hook"] = *k.post_hook;
    if (k.pre_hook) kj["pre_hook"] = *k.pre_hook;
    j["space." + k.name] = kj;
  }
  std::vector<std::string> names;
  for (const auto& m : c.serve.models) names.push_back(m.name);
  j["models"] = {{"preset", c.model_preset}, {"list", names}};
  for (const auto& m : c.serve.models) {
    std::vector<std::string> rows;
    for (const auto& [bb, cc] : m.latency) rows.push_back(absl::StrCat(bb, ":", json(cc).dump()));
    j["model." + m.name] = {{"family", m.family},
                            {"task", m.task},
                            {"accuracy", m.accuracy},
                            {"memory_mb", m.memory_mb},
                            {"latency", absl::StrJoin(rows, ",")}};
  }
  json ens = {{"table", c.serve.table.empty() ? "derive" : "explicit"},
              {"seed", c.serve.table_seed},
              {"examples", c.serve.vote.num_examples},
              {"labels", c.serve.vote.num_labels},
              {"rho", c.serve.vote.rho}};
  for (uint32_t mask = 1; mask < c.serve.table.size(); ++mask) {
    std::vector<std::string> members;
    for (size_t i = 0; i < c.serve.models.size(); ++i) {
      if (mask & (1u << i)) members.push_back(c.serve.models[i].name);
    }
    ens["acc." + absl::StrJoin(members, "+")] = c.serve.table[mask];
  }
  j["ensemble"] = ens;
  const auto& rl = c.serve.rl;
  j["rl"] = {{"queue_len", rl.queue_len},
             {"hidden", rl.hidden},
             {"gamma", rl.gamma},
             {"lr_policy", rl.lr_policy},
             {"lr_value", rl.lr_value},
             {"momentum", rl.momentum},
             {"beta", rl.beta},
             {"return_scale", rl.return_scale},
             {"normalize_advantage", rl.normalize_advantage},
             {"max_grad_norm", rl.max_grad_norm},
             {"train_episodes", rl.train_episodes}};
  const auto& s = c.serve;
  j["workload"] = {{"dispatcher", s.dispatcher},
                   {"anchor", s.anchor == RateAnchor::kMax ? "max" : "min"},
                   {"tau", s.batching.tau},
                   {"delta", s.batching.delta},
                   {"batch_sizes", s.batching.batch_sizes},
                   {"period", s.workload.period},
                   {"duration", s.workload.duration},
                   {"window", s.workload.window},
                   {"dt", s.workload.dt},
                   {"queue_capacity", s.workload.queue_capacity},
                   {"noise_sd", s.workload.noise_sd}};
  j["output"] = {{"dir", c.out_dir}, {"trace", c.trace}};
  return j.dump(2) + "\n";
}

}  // namespace rafiki
