#include "scg/graph_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "scg/error.hpp"

namespace scg {

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    size_t line = 1, col = 1;
    for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(Errc::ParseError,
                what + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::ConfigError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

[[noreturn]] void bad(const std::string& where, const std::string& msg) {
  throw Error(Errc::ParseError, where + ": " + msg);
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) bad(where, std::string("missing field '") + key + "'");
  if (!it->is_string()) bad(where + "." + key, "expected a string");
  return it->get<std::string>();
}

std::vector<std::string> get_strings(const json& obj, const char* key, const std::string& where) {
  std::vector<std::string> out;
  auto it = obj.find(key);
  if (it == obj.end()) return out;
  if (!it->is_array()) bad(where + "." + key, "expected an array of strings");
  for (size_t i = 0; i < it->size(); ++i) {
    if (!(*it)[i].is_string()) bad(where + "." + key + "[" + std::to_string(i) + "]", "expected a string");
    out.push_back((*it)[i].get<std::string>());
  }
  return out;
}

}  // namespace

Graph graph_from_json(const json& doc) {
  if (!doc.is_object()) bad("$", "expected an object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (it.key() != "nodes" && it.key() != "costs") bad("$." + it.key(), "unknown field");
  if (!doc.contains("nodes") || !doc["nodes"].is_array()) bad("$.nodes", "expected an array");
  const std::vector<std::string> cost_list = get_strings(doc, "costs", "$");
  const std::set<std::string> cost_names(cost_list.begin(), cost_list.end());

  static const std::set<std::string> allowed{"name", "kind", "family", "parents", "expr",
                                             "logits", "prob", "mean", "logstd"};
  std::vector<NodeDecl> decls;
  std::set<std::string> declared;
  const json& nodes = doc["nodes"];
  for (size_t i = 0; i < nodes.size(); ++i) {
    const std::string where = "$.nodes[" + std::to_string(i) + "]";
    const json& n = nodes[i];
    if (!n.is_object()) bad(where, "expected an object");
    for (auto it = n.begin(); it != n.end(); ++it)
      if (!allowed.count(it.key())) bad(where + "." + it.key(), "unknown field");
    const std::string name = get_string(n, "name", where);
    const std::string kind = get_string(n, "kind", where);
    std::vector<std::string> parents = get_strings(n, "parents", where);
    for (const auto& p : parents)
      if (!declared.count(p))
        throw Error(Errc::UnknownParent, "node '" + name + "' names undeclared parent '" + p + "'");
    declared.insert(name);

    if (kind == "input") {
      if (!parents.empty()) throw Error(Errc::InputWithParent, "input '" + name + "' declares parents");
      decls.push_back(decl::input(name));
    } else if (kind == "deterministic" || kind == "cost") {
      const std::string e = get_string(n, "expr", where);
      if (kind == "cost" || cost_names.count(name)) decls.push_back(decl::cost(name, parents, e));
      else decls.push_back(decl::deterministic(name, parents, e));
    } else if (kind == "stochastic") {
      const std::string fam = get_string(n, "family", where);
      if (fam == "categorical") {
        decls.push_back(decl::categorical(name, parents, get_strings(n, "logits", where)));
      } else if (fam == "bernoulli") {
        decls.push_back(decl::bernoulli(name, parents, get_string(n, "prob", where)));
      } else if (fam == "gaussian") {
        decls.push_back(decl::gaussian(name, parents, get_string(n, "mean", where), get_string(n, "logstd", where)));
      } else {
        throw Error(Errc::UnsupportedFamily, where + ".family: '" + fam + "'");
      }
    } else {
      bad(where + ".kind", "unknown kind '" + kind + "'");
    }
  }
  for (const auto& c : cost_names) {
    bool found = false;
    for (const auto& d : decls)
      if (d.name == c) {
        found = true;
        if (d.kind != Kind::Cost) throw Error(Errc::BadDeclaration, "cost '" + c + "' must be computed by an expr");
      }
    if (!found) throw Error(Errc::UnknownNode, "costs names unknown node '" + c + "'");
  }
  return build_graph(std::move(decls));
}

Graph load_graph(const std::string& path) { return graph_from_json(parse_json_text(read_file(path), path)); }

json graph_to_json(const Graph& g) {
  json nodes = json::array();
  json costs = json::array();
  for (NodeId v : g.order()) {
    const Node& nd = g.node(v);
    json n;
    n["name"] = nd.name;
    std::vector<std::string> pn = g.names(nd.parents);
    n["parents"] = pn;
    switch (nd.kind) {
      case Kind::Input: n["kind"] = "input"; break;
      case Kind::Deterministic:
      case Kind::Cost:
        n["kind"] = nd.kind == Kind::Cost ? "cost" : "deterministic";
        n["expr"] = nd.fn.to_string(pn);
        if (nd.kind == Kind::Cost) costs.push_back(nd.name);
        break;
      case Kind::Stochastic:
        n["kind"] = "stochastic";
        n["family"] = family_name(nd.dist.family);
        if (nd.dist.family == Family::Gaussian) {
          n["mean"] = nd.dist.mean.to_string(pn);
          n["logstd"] = nd.dist.logstd.to_string(pn);
        } else if (nd.dist.family == Family::Bernoulli) {
          n["prob"] = nd.dist.prob.to_string(pn);
        } else {
          json l = json::array();
          for (const auto& e : nd.dist.logits) l.push_back(e.to_string(pn));
          n["logits"] = l;
        }
        break;
    }
    nodes.push_back(n);
  }
  return json{{"nodes", nodes}, {"costs", costs}};
}

}  // namespace scg
