#include "scg/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <tuple>

#include "scg/error.hpp"
#include "scg/fixtures.hpp"
#include "scg/graph_io.hpp"
#include "scg/oracle.hpp"

namespace scg {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& what, const std::string& path, const std::string& msg) {
  throw Error(Errc::ConfigError, what + ": " + path + ": " + msg);
}

void only(const json& j, const std::string& what, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) fail(what, path, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) fail(what, path + "." + it.key(), "unknown field");
  }
}

std::string str(const json& j, const std::string& what, const std::string& path) {
  if (!j.is_string()) fail(what, path, "expected a string");
  return j.get<std::string>();
}

double num(const json& j, const std::string& what, const std::string& path) {
  if (!j.is_number()) fail(what, path, "expected a number");
  return j.get<double>();
}

size_t count(const json& j, const std::string& what, const std::string& path) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
    fail(what, path, "expected a non-negative integer");
  return j.get<size_t>();
}

std::vector<std::string> names(const json& j, const std::string& what, const std::string& path) {
  if (!j.is_array()) fail(what, path, "expected an array of node names");
  std::vector<std::string> out;
  for (size_t i = 0; i < j.size(); ++i) out.push_back(str(j[i], what, path + "[" + std::to_string(i) + "]"));
  return out;
}

std::map<std::string, double> input_map(const json& j, const std::string& what, const std::string& path) {
  if (!j.is_object()) fail(what, path, "expected an object of input values");
  std::map<std::string, double> out;
  for (auto it = j.begin(); it != j.end(); ++it) out[it.key()] = num(it.value(), what, path + "." + it.key());
  return out;
}

// Walks an estimator description. With g == nullptr only the structure is
// checked; otherwise node names are resolved and sources built.
struct SpecWalker {
  std::string what;
  const Graph* g = nullptr;
  const Inputs* inputs = nullptr;
  const ChainSpec* chain = nullptr;
  EnumOptions enumeration;

  NodeId node(const std::string& n, const std::string& path) const {
    if (!g) return -1;
    if (!g->has(n)) fail(what, path, "unknown node '" + n + "'");
    return g->id(n);
  }

  NodeSet set(const json& j, const std::string& path) const {
    NodeSet s;
    const auto ns = names(j, what, path);
    for (size_t i = 0; i < ns.size(); ++i) s.insert(node(ns[i], path + "[" + std::to_string(i) + "]"));
    return g ? s : NodeSet{};
  }

  SourcePtr source(const json& j, const std::string& path, const NodeSet& C, const NodeSet& costs) const {
    std::string kind = "exact";
    double scale = 1.0;
    if (j.contains("source")) kind = str(j.at("source"), what, path + ".source");
    if (j.contains("scale")) scale = num(j.at("scale"), what, path + ".scale");
    if (kind != "exact" && kind != "zero") fail(what, path + ".source", "expected \"exact\" or \"zero\"");
    if (!g) return nullptr;
    SourcePtr s;
    if (kind == "zero") s = std::make_shared<ConstantSource>(sorted(C), 0.0);
    else s = std::make_shared<ExactValueFn>(*g, *inputs, C, costs, enumeration);
    if (scale != 1.0) s = std::make_shared<ScaledSource>(s, scale);
    return s;
  }

  size_t step_of(NodeId v, const std::string& path) const {
    if (!g) return 0;
    if (!chain) fail(what, path, "k-step and lambda critics need a chain fixture");
    auto it = std::find(chain->actions.begin(), chain->actions.end(), v);
    if (it == chain->actions.end()) fail(what, path, "'" + g->name(v) + "' is not a chain action");
    return static_cast<size_t>(it - chain->actions.begin());
  }

  CriticChoice critic(const json& j, const std::string& path, NodeId v) const {
    if (!j.is_object()) fail(what, path, "expected an object");
    const std::string kind = j.contains("kind") ? str(j.at("kind"), what, path + ".kind") : "";
    if (kind == "empirical") {
      only(j, what, path, {"kind"});
      return CriticChoice::empirical();
    }
    if (kind == "value") {
      only(j, what, path, {"kind", "set", "source", "scale"});
      if (!j.contains("set")) fail(what, path, "missing field 'set'");
      const NodeSet C = set(j.at("set"), path + ".set");
      return CriticChoice::value(C, source(j, path, C, g ? cost_to_go_set(*g, v) : NodeSet{}));
    }
    if (kind == "partial") {
      only(j, what, path, {"kind", "sampled", "parts"});
      if (!j.contains("sampled") || !j.contains("parts")) fail(what, path, "needs 'sampled' and 'parts'");
      const NodeSet V0 = set(j.at("sampled"), path + ".sampled");
      const json& ps = j.at("parts");
      if (!ps.is_array()) fail(what, path + ".parts", "expected an array");
      std::vector<PartSpec> parts;
      for (size_t i = 0; i < ps.size(); ++i) {
        const std::string pp = path + ".parts[" + std::to_string(i) + "]";
        only(ps[i], what, pp, {"nodes", "cond", "source", "scale"});
        if (!ps[i].contains("nodes") || !ps[i].contains("cond")) fail(what, pp, "needs 'nodes' and 'cond'");
        PartSpec p;
        p.nodes = set(ps[i].at("nodes"), pp + ".nodes");
        p.cond = set(ps[i].at("cond"), pp + ".cond");
        p.source = source(ps[i], pp, p.cond, g ? cost_to_go_set(*g, p.nodes) : NodeSet{});
        parts.push_back(p);
      }
      return CriticChoice::partial(V0, parts);
    }
    if (kind == "kstep") {
      only(j, what, path, {"kind", "k"});
      if (!j.contains("k")) fail(what, path, "missing field 'k'");
      const size_t k = count(j.at("k"), what, path + ".k");
      if (!g) return {};
      return kstep_critic(*g, *chain, step_of(v, path), static_cast<int>(k), *inputs);
    }
    if (kind == "lambda") {
      only(j, what, path, {"kind", "lambda"});
      if (!j.contains("lambda")) fail(what, path, "missing field 'lambda'");
      const double lam = num(j.at("lambda"), what, path + ".lambda");
      if (!(lam >= 0.0 && lam <= 1.0)) fail(what, path + ".lambda", "must lie in [0, 1]");
      if (!g) return {};
      return lambda_critic(*g, *chain, step_of(v, path), lam, *inputs);
    }
    if (kind == "mixture") {
      only(j, what, path, {"kind", "components"});
      if (!j.contains("components") || !j.at("components").is_array()) fail(what, path, "needs 'components'");
      std::vector<std::pair<double, CriticChoice>> m;
      const json& cs = j.at("components");
      for (size_t i = 0; i < cs.size(); ++i) {
        const std::string cp = path + ".components[" + std::to_string(i) + "]";
        only(cs[i], what, cp, {"weight", "critic"});
        if (!cs[i].contains("weight") || !cs[i].contains("critic")) fail(what, cp, "needs 'weight' and 'critic'");
        m.emplace_back(num(cs[i].at("weight"), what, cp + ".weight"), critic(cs[i].at("critic"), cp + ".critic", v));
      }
      return CriticChoice::mix(std::move(m));
    }
    fail(what, path + ".kind", "expected one of empirical, value, partial, kstep, lambda, mixture");
  }

  BaselineChoice baseline(const json& j, const std::string& path, NodeId v) const {
    if (!j.is_object()) fail(what, path, "expected an object");
    const std::string kind = j.contains("kind") ? str(j.at("kind"), what, path + ".kind") : "";
    if (kind == "none") {
      only(j, what, path, {"kind"});
      return BaselineChoice::none();
    }
    if (kind == "value") {
      only(j, what, path, {"kind", "set", "source", "scale"});
      if (!j.contains("set")) fail(what, path, "missing field 'set'");
      const NodeSet B = set(j.at("set"), path + ".set");
      return BaselineChoice::value(B, source(j, path, B, g ? cost_to_go_set(*g, v) : NodeSet{}));
    }
    if (kind == "optimal") {
      only(j, what, path, {"kind", "set"});
      if (!j.contains("set")) fail(what, path, "missing field 'set'");
      return BaselineChoice::optimal(set(j.at("set"), path + ".set"));
    }
    fail(what, path + ".kind", "expected one of none, value, optimal");
  }

  EstimatorSpec spec(const json& j, const std::string& path) const {
    EstimatorSpec s;
    if (j.contains("reparameterize")) {
      const auto ns = names(j.at("reparameterize"), what, path + ".reparameterize");
      for (size_t i = 0; i < ns.size(); ++i)
        s.reparameterize.push_back(node(ns[i], path + ".reparameterize[" + std::to_string(i) + "]"));
    }
    if (j.contains("nodes")) {
      const json& ns = j.at("nodes");
      if (!ns.is_array()) fail(what, path + ".nodes", "expected an array");
      for (size_t i = 0; i < ns.size(); ++i) {
        const std::string np = path + ".nodes[" + std::to_string(i) + "]";
        only(ns[i], what, np, {"node", "critic", "baseline", "debias"});
        if (!ns[i].contains("node")) fail(what, np, "missing field 'node'");
        NodeSpec n;
        n.node = node(str(ns[i].at("node"), what, np + ".node"), np + ".node");
        if (ns[i].contains("critic")) n.critic = critic(ns[i].at("critic"), np + ".critic", n.node);
        if (ns[i].contains("baseline")) n.baseline = baseline(ns[i].at("baseline"), np + ".baseline", n.node);
        if (ns[i].contains("debias")) {
          if (!ns[i].at("debias").is_boolean()) fail(what, np + ".debias", "expected a boolean");
          n.debias = ns[i].at("debias").get<bool>();
        }
        s.nodes.push_back(std::move(n));
      }
    }
    if (j.contains("injections")) {
      const json& is = j.at("injections");
      if (!is.is_array()) fail(what, path + ".injections", "expected an array");
      for (size_t i = 0; i < is.size(); ++i) {
        const std::string ip = path + ".injections[" + std::to_string(i) + "]";
        only(is[i], what, ip, {"u", "S", "sets", "mode"});
        if (!is[i].contains("u") || !is[i].contains("S")) fail(what, ip, "needs 'u' and 'S'");
        Injection in;
        in.u = node(str(is[i].at("u"), what, ip + ".u"), ip + ".u");
        const auto S = names(is[i].at("S"), what, ip + ".S");
        for (size_t k = 0; k < S.size(); ++k) in.S.push_back(node(S[k], ip + ".S[" + std::to_string(k) + "]"));
        if (is[i].contains("sets")) {
          const json& ss = is[i].at("sets");
          if (!ss.is_array() || ss.size() != S.size()) fail(what, ip + ".sets", "expected one set per member of S");
          for (size_t k = 0; k < ss.size(); ++k) in.sets.push_back(set(ss[k], ip + ".sets[" + std::to_string(k) + "]"));
        }
        if (is[i].contains("mode")) {
          const std::string m = str(is[i].at("mode"), what, ip + ".mode");
          if (m != "gradient-critic" && m != "value-gradient")
            fail(what, ip + ".mode", "expected \"gradient-critic\" or \"value-gradient\"");
          in.value_gradient = m == "value-gradient";
        }
        s.injections.push_back(std::move(in));
      }
    }
    return s;
  }
};

RowConfig parse_row(const json& j, const std::string& what, const std::string& path) {
  only(j, what, path,
       {"id", "fixture", "inputs", "samples", "seed", "expect_unbiased", "checks", "reparameterize", "nodes",
        "injections"});
  RowConfig r;
  if (!j.contains("id")) fail(what, path, "missing field 'id'");
  r.id = str(j.at("id"), what, path + ".id");
  if (j.contains("fixture")) r.fixture = str(j.at("fixture"), what, path + ".fixture");
  if (j.contains("inputs")) r.inputs = input_map(j.at("inputs"), what, path + ".inputs");
  if (j.contains("samples")) r.samples = count(j.at("samples"), what, path + ".samples");
  if (j.contains("seed")) {
    r.seed = count(j.at("seed"), what, path + ".seed");
    r.has_seed = true;
  }
  if (j.contains("expect_unbiased")) {
    if (!j.at("expect_unbiased").is_boolean()) fail(what, path + ".expect_unbiased", "expected a boolean");
    r.expect_unbiased = j.at("expect_unbiased").get<bool>();
  }
  if (j.contains("checks") && !j.at("checks").is_boolean()) fail(what, path + ".checks", "expected a boolean");
  SpecWalker w;
  w.what = what;
  w.spec(j, path);
  r.spec = j;
  return r;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

ExperimentConfig parse_config(const json& doc, const std::string& what) {
  only(doc, what, "$", {"fixture", "graph", "inputs", "samples", "seed", "enumeration", "output", "estimators"});
  ExperimentConfig c;
  if (doc.contains("fixture")) c.fixture = str(doc.at("fixture"), what, "$.fixture");
  if (doc.contains("graph")) c.graph_path = str(doc.at("graph"), what, "$.graph");
  if (c.fixture.empty() == c.graph_path.empty()) fail(what, "$", "exactly one of 'fixture' and 'graph' is required");
  if (!c.fixture.empty()) {
    try {
      fixture(c.fixture);
    } catch (const Error&) {
      fail(what, "$.fixture", "unknown fixture '" + c.fixture + "'");
    }
  }
  if (doc.contains("inputs")) c.inputs = input_map(doc.at("inputs"), what, "$.inputs");
  if (doc.contains("samples")) c.samples = count(doc.at("samples"), what, "$.samples");
  if (doc.contains("seed")) c.seed = count(doc.at("seed"), what, "$.seed");
  if (doc.contains("enumeration")) {
    const json& e = doc.at("enumeration");
    only(e, what, "$.enumeration", {"order", "cap"});
    if (e.contains("order")) c.enumeration.order = static_cast<int>(count(e.at("order"), what, "$.enumeration.order"));
    if (e.contains("cap")) c.enumeration.cap = count(e.at("cap"), what, "$.enumeration.cap");
  }
  if (doc.contains("output")) c.output = str(doc.at("output"), what, "$.output");
  if (doc.contains("estimators")) {
    const json& es = doc.at("estimators");
    if (!es.is_array()) fail(what, "$.estimators", "expected an array");
    for (size_t i = 0; i < es.size(); ++i) {
      const std::string p = "$.estimators[" + std::to_string(i) + "]";
      RowConfig r = parse_row(es[i], what, p);
      if (!r.fixture.empty()) {
        try {
          fixture(r.fixture);
        } catch (const Error&) {
          fail(what, p + ".fixture", "unknown fixture '" + r.fixture + "'");
        }
      }
      for (const RowConfig& o : c.estimators)
        if (o.id == r.id) fail(what, p + ".id", "duplicate estimator id '" + r.id + "'");
      c.estimators.push_back(std::move(r));
    }
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  ExperimentConfig c = parse_config(parse_json_text(read_file(path), path), path);
  if (!c.graph_path.empty() && c.graph_path[0] != '/') {
    const auto slash = path.find_last_of('/');
    if (slash != std::string::npos) c.graph_path = path.substr(0, slash + 1) + c.graph_path;
  }
  return c;
}

Built build_row(const ExperimentConfig& cfg, const RowConfig& row) {
  Built b;
  std::map<std::string, double> in;
  const ChainSpec* chain = nullptr;
  const std::string fx = row.fixture.empty() ? cfg.fixture : row.fixture;
  if (!fx.empty()) {
    const Fixture& f = fixture(fx);
    b.graph = std::shared_ptr<const Graph>(&f.graph, [](const Graph*) {});
    in = f.canonical;
    if (f.chain) chain = &*f.chain;
  } else {
    b.graph = std::make_shared<const Graph>(load_graph(cfg.graph_path));
  }
  if (row.fixture.empty() || row.fixture == cfg.fixture)
    for (const auto& [k, v] : cfg.inputs) in[k] = v;
  for (const auto& [k, v] : row.inputs) in[k] = v;
  b.inputs = make_inputs(*b.graph, in);
  SpecWalker w{"estimator '" + row.id + "'", b.graph.get(), &b.inputs, chain, cfg.enumeration};
  EstimatorSpec spec = w.spec(row.spec, "$");
  CompileOptions opt;
  opt.enumeration = cfg.enumeration;
  if (row.spec.contains("checks")) opt.checks = row.spec.at("checks").get<bool>();
  b.est = std::make_unique<CompiledEstimator>(*b.graph, b.inputs, std::move(spec), opt);
  return b;
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& cfg) {
  std::vector<ResultRow> out;
  for (const RowConfig& row : cfg.estimators) {
    Built b = build_row(cfg, row);
    const size_t n = row.samples ? row.samples : cfg.samples;
    const unsigned long long seed = row.has_seed ? row.seed : cfg.seed;
    const GradientEstimate ge = b.est->monte_carlo(n, seed);
    bool enumerable = true;
    ExactGradient truth;
    std::vector<Moments> mom;
    try {
      truth = exact_parameter_gradient(*b.graph, b.inputs, cfg.enumeration);
      mom = b.est->exact_moments();
    } catch (const Error& e) {
      if (e.code() != Errc::SupportTooLarge) throw;
      enumerable = false;
    }
    std::vector<ResultRow> rows;
    bool any_biased = false;
    for (size_t k = 0; k < ge.params.size(); ++k) {
      ResultRow r;
      r.id = row.id;
      r.fixture = row.fixture.empty() ? (cfg.fixture.empty() ? cfg.graph_path : cfg.fixture) : row.fixture;
      r.param = ge.params[k];
      r.n = n;
      r.seed = seed;
      r.mc_mean = ge.mean[k];
      r.stderr_ = ge.stderr_[k];
      r.enumerable = enumerable;
      if (enumerable) {
        const NodeId p = b.est->params()[k];
        r.exact_gradient = truth.grad[static_cast<size_t>(p)];
        r.exact_mean = mom[k].mean;
        r.exact_var = mom[k].var;
        const double diff = std::abs(r.mc_mean - r.exact_gradient);
        r.pass = r.stderr_ > 0.0 ? diff <= 4.0 * r.stderr_ : diff <= 1e-9 * (1.0 + std::abs(r.exact_gradient));
        any_biased = any_biased || std::abs(r.exact_mean - r.exact_gradient) > 1e-6;
      } else {
        r.pass = true;
      }
      rows.push_back(r);
    }
    // Rows declared biased pass when the enumeration shows the bias.
    if (!row.expect_unbiased)
      for (ResultRow& r : rows) r.pass = enumerable && any_biased;
    out.insert(out.end(), rows.begin(), rows.end());
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const ResultRow& a, const ResultRow& b) { return std::tie(a.id, a.param) < std::tie(b.id, b.param); });
  return out;
}

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::ostringstream os;
  os << "id,fixture,param,n,seed,mc_mean,stderr,exact_gradient,exact_mean,exact_var,gate\n";
  for (const ResultRow& r : rows) {
    os << r.id << ',' << r.fixture << ',' << r.param << ',' << r.n << ',' << r.seed << ',' << fmt(r.mc_mean) << ','
       << fmt(r.stderr_) << ',';
    if (r.enumerable) os << fmt(r.exact_gradient) << ',' << fmt(r.exact_mean) << ',' << fmt(r.exact_var) << ',';
    else os << ",,,";
    os << (r.pass ? "pass" : "fail") << '\n';
  }
  return os.str();
}

}  // namespace scg
