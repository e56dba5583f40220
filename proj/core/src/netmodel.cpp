#include "dlmp/netmodel.hpp"

#include "dlmp/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

namespace dlmp {
namespace {

struct Row {
  std::vector<double> values;
  int line = 0;
};

struct CaseSections {
  std::optional<double> base_mva;
  int base_mva_line = 0;
  std::optional<std::vector<Row>> bus;
  std::optional<std::vector<Row>> branch;
};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_number(std::string_view token, int line) {
  double value = 0.0;
  // from_chars rejects a leading '+', which MATPOWER files occasionally use.
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    if (token == "Inf" || token == "inf") return HUGE_VAL;
    if (token == "-Inf" || token == "-inf") return -HUGE_VAL;
    throw CaseError(CaseError::Kind::Syntax,
                    "line " + std::to_string(line) + ": not a number: '" + std::string(token) + "'",
                    line);
  }
  return value;
}

// Splits one matrix line into rows on ';' and numbers on whitespace/commas.
// Returns true when the closing ']' was seen.
bool consume_matrix_line(std::string_view body, int line, std::vector<Row>& rows, Row& pending) {
  bool closed = false;
  if (auto close = body.find(']'); close != std::string_view::npos) {
    if (!trim(body.substr(close + 1)).empty() && trim(body.substr(close + 1)) != ";") {
      throw CaseError(CaseError::Kind::Syntax,
                      "line " + std::to_string(line) + ": unexpected text after ']'", line);
    }
    body = body.substr(0, close);
    closed = true;
  }
  std::size_t pos = 0;
  while (pos <= body.size()) {
    const auto semi = body.find(';', pos);
    const auto chunk = body.substr(pos, semi == std::string_view::npos ? std::string_view::npos : semi - pos);
    std::size_t i = 0;
    while (i < chunk.size()) {
      while (i < chunk.size() && (chunk[i] == ' ' || chunk[i] == '\t' || chunk[i] == ',' || chunk[i] == '\r')) ++i;
      std::size_t j = i;
      while (j < chunk.size() && chunk[j] != ' ' && chunk[j] != '\t' && chunk[j] != ',' && chunk[j] != '\r') ++j;
      if (j > i) {
        if (pending.values.empty()) pending.line = line;
        pending.values.push_back(parse_number(chunk.substr(i, j - i), line));
      }
      i = j;
    }
    if (semi == std::string_view::npos) break;
    if (!pending.values.empty()) rows.push_back(std::move(pending));
    pending = Row{};
    pos = semi + 1;
  }
  // A newline also terminates a row.
  if (!pending.values.empty()) {
    rows.push_back(std::move(pending));
    pending = Row{};
  }
  return closed;
}

CaseSections read_sections(std::string_view text) {
  CaseSections out;
  std::vector<Row>* active = nullptr;
  std::vector<Row> scratch;  // sections we do not need (gen, gencost, ...)
  Row pending;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto end = text.find('\n', start);
    auto line = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
    ++line_no;
    if (auto pct = line.find('%'); pct != std::string_view::npos) line = line.substr(0, pct);
    line = trim(line);

    if (active != nullptr) {
      if (consume_matrix_line(line, line_no, *active, pending)) active = nullptr;
    } else if (line.starts_with("mpc.")) {
      const auto eq = line.find('=');
      if (eq == std::string_view::npos) {
        throw CaseError(CaseError::Kind::Syntax, "line " + std::to_string(line_no) + ": expected '='", line_no);
      }
      const auto name = trim(line.substr(4, eq - 4));
      auto rhs = trim(line.substr(eq + 1));
      if (!rhs.empty() && rhs.front() == '[') {
        std::vector<Row>* target = &scratch;
        if (name == "bus") {
          out.bus.emplace();
          target = &*out.bus;
        } else if (name == "branch") {
          out.branch.emplace();
          target = &*out.branch;
        } else {
          scratch.clear();
        }
        if (!consume_matrix_line(rhs.substr(1), line_no, *target, pending)) active = target;
      } else if (name == "baseMVA") {
        if (!rhs.empty() && rhs.back() == ';') rhs.remove_suffix(1);
        out.base_mva = parse_number(trim(rhs), line_no);
        out.base_mva_line = line_no;
      }
    }
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  if (active != nullptr) {
    throw CaseError(CaseError::Kind::Syntax, "unterminated matrix (missing ']')", line_no);
  }
  return out;
}

}  // namespace

void Network::validate() const {
  if (node_count < 1) throw ArgumentError("network needs at least one non-root node");
  if (static_cast<int>(edges.size()) != node_count) {
    throw ArgumentError("radial network must have exactly node_count edges");
  }
  if (static_cast<int>(nominal_load.size()) != node_count) {
    throw ArgumentError("nominal_load must have one entry per non-root node");
  }
  if (!(v0 > 0.0)) throw ArgumentError("v0 must be positive");
  std::vector<int> parent(node_count + 1, -1);
  for (const auto& e : edges) {
    if (e.from < 0 || e.from > node_count || e.to < 1 || e.to > node_count) {
      throw ArgumentError("edge endpoint out of range");
    }
    if (!(e.r >= 0.0) || !(e.x >= 0.0)) throw ArgumentError("edge impedance must be nonnegative");
    if (parent[e.to] != -1) throw ArgumentError("node " + std::to_string(e.to) + " has two incoming edges");
    parent[e.to] = e.from;
  }
  // Every node must reach the root by following parents.
  for (int k = 1; k <= node_count; ++k) {
    int j = k;
    for (int steps = 0; j != 0; ++steps) {
      if (steps > node_count) throw ArgumentError("edges contain a cycle");
      j = parent[j];
    }
  }
}

Network Network::without_impedance() const {
  Network copy = *this;
  for (auto& e : copy.edges) {
    e.r = 0.0;
    e.x = 0.0;
  }
  return copy;
}

Network parse_case(std::string_view text) {
  const auto sections = read_sections(text);
  if (!sections.base_mva) throw CaseError(CaseError::Kind::Syntax, "missing mpc.baseMVA");
  if (!sections.bus) throw CaseError(CaseError::Kind::Syntax, "missing mpc.bus section");
  if (!sections.branch) throw CaseError(CaseError::Kind::Syntax, "missing mpc.branch section");
  const double base = *sections.base_mva;
  if (!(base > 0.0)) {
    throw CaseError(CaseError::Kind::Syntax, "baseMVA must be positive", sections.base_mva_line);
  }

  struct BusRow {
    double pd, qd, vm;
    int line;
  };
  std::map<long, BusRow> buses;
  std::optional<long> reference;
  for (const auto& row : *sections.bus) {
    if (row.values.size() < 4) {
      throw CaseError(CaseError::Kind::Syntax,
                      "line " + std::to_string(row.line) + ": bus row needs at least 4 columns", row.line);
    }
    const auto id = static_cast<long>(row.values[0]);
    if (static_cast<double>(id) != row.values[0] || id <= 0) {
      throw CaseError(CaseError::Kind::Syntax,
                      "line " + std::to_string(row.line) + ": bus number must be a positive integer", row.line);
    }
    if (buses.contains(id)) {
      throw CaseError(CaseError::Kind::Syntax,
                      "line " + std::to_string(row.line) + ": duplicate bus " + std::to_string(id), row.line, id);
    }
    const double vm = row.values.size() > 7 ? row.values[7] : 1.0;
    buses.emplace(id, BusRow{row.values[2], row.values[3], vm, row.line});
    if (static_cast<int>(row.values[1]) == 3) {
      if (reference) {
        throw CaseError(CaseError::Kind::Topology,
                        "line " + std::to_string(row.line) + ": second reference bus " + std::to_string(id), row.line,
                        id);
      }
      reference = id;
    }
  }
  if (!reference) {
    throw CaseError(CaseError::Kind::MissingSubstation, "no reference (type 3) bus found");
  }

  std::map<long, int> index;
  index[*reference] = 0;
  int next = 1;
  for (const auto& [id, _] : buses) {
    if (id != *reference) index[id] = next++;
  }
  const int n = next - 1;

  struct Link {
    int other;
    double r, x;
    int line;
  };
  std::vector<std::vector<Link>> adjacency(n + 1);
  for (const auto& row : *sections.branch) {
    if (row.values.size() < 4) {
      throw CaseError(CaseError::Kind::Syntax,
                      "line " + std::to_string(row.line) + ": branch row needs at least 4 columns", row.line);
    }
    if (row.values.size() > 10 && row.values[10] == 0.0) continue;
    const auto f = static_cast<long>(row.values[0]);
    const auto t = static_cast<long>(row.values[1]);
    for (long b : {f, t}) {
      if (!index.contains(b)) {
        throw CaseError(CaseError::Kind::Topology,
                        "line " + std::to_string(row.line) + ": branch references unknown bus " + std::to_string(b),
                        row.line, b);
      }
    }
    if (f == t) {
      throw CaseError(CaseError::Kind::Topology,
                      "line " + std::to_string(row.line) + ": branch connects bus " + std::to_string(f) + " to itself",
                      row.line, f);
    }
    if (row.values[2] < 0.0 || row.values[3] < 0.0) {
      throw CaseError(CaseError::Kind::Syntax,
                      "line " + std::to_string(row.line) + ": negative branch impedance", row.line);
    }
    adjacency[index[f]].push_back({index[t], row.values[2], row.values[3], row.line});
    adjacency[index[t]].push_back({index[f], row.values[2], row.values[3], row.line});
  }

  std::vector<long> external(n + 1);
  for (const auto& [id, k] : index) external[k] = id;

  // Orient away from the root; any branch closing back onto a visited node is a cycle.
  std::vector<int> parent(n + 1, -1);
  std::vector<int> parent_line(n + 1, 0);
  std::vector<Edge> by_node(n + 1);
  std::vector<bool> seen(n + 1, false);
  std::deque<int> queue{0};
  seen[0] = true;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    bool skipped_parent_link = false;
    for (const auto& link : adjacency[u]) {
      if (link.other == parent[u] && link.line == parent_line[u] && !skipped_parent_link) {
        skipped_parent_link = true;
        continue;
      }
      if (seen[link.other]) {
        throw CaseError(CaseError::Kind::Topology,
                        "line " + std::to_string(link.line) + ": branch " + std::to_string(external[u]) + "-" +
                            std::to_string(external[link.other]) + " closes a cycle",
                        link.line, external[link.other]);
      }
      seen[link.other] = true;
      parent[link.other] = u;
      parent_line[link.other] = link.line;
      by_node[link.other] = Edge{u, link.other, link.r, link.x};
      queue.push_back(link.other);
    }
  }
  for (int k = 1; k <= n; ++k) {
    if (!seen[k]) {
      throw CaseError(CaseError::Kind::Topology,
                      "bus " + std::to_string(external[k]) + " is not connected to the substation",
                      buses.at(external[k]).line, external[k]);
    }
  }

  Network net;
  net.node_count = n;
  net.v0 = buses.at(*reference).vm;
  for (int k = 1; k <= n; ++k) {
    net.edges.push_back(by_node[k]);
    const auto& b = buses.at(external[k]);
    net.nominal_load.push_back({b.pd / base, b.qd / base});
  }
  return net;
}

Network load_case_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open case file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_case(ss.str());
}

std::string write_case(const Network& net) {
  net.validate();
  std::ostringstream out;
  out.precision(17);
  out << "function mpc = exported_case\n"
      << "mpc.version = '2';\n"
      << "mpc.baseMVA = 1;\n\n"
      << "%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin\n"
      << "mpc.bus = [\n";
  // Node k is written as bus k + 1, so sorted renumbering reproduces the indices.
  out << "\t1\t3\t0\t0\t0\t0\t1\t" << net.v0 << "\t0\t0\t1\t" << net.v0 << '\t' << net.v0 << ";\n";
  for (int k = 1; k <= net.node_count; ++k) {
    const auto& load = net.nominal_load[k - 1];
    out << '\t' << k + 1 << "\t1\t" << load.p << '\t' << load.q << "\t0\t0\t1\t1\t0\t0\t1\t1.1\t0.9;\n";
  }
  out << "];\n\n"
      << "%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax\n"
      << "mpc.branch = [\n";
  auto edges = net.edges;
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) { return a.to < b.to; });
  for (const auto& e : edges) {
    out << '\t' << e.from + 1 << '\t' << e.to + 1 << '\t' << e.r << '\t' << e.x
        << "\t0\t0\t0\t0\t0\t0\t1\t-360\t360;\n";
  }
  out << "];\n";
  return out.str();
}

Network scale_loads(const Network& net, double factor) {
  if (!(factor > 0.0) || !std::isfinite(factor)) throw ArgumentError("load scale factor must be positive");
  Network scaled = net;
  for (auto& load : scaled.nominal_load) {
    load.p *= factor;
    load.q *= factor;
  }
  return scaled;
}

Sensitivities build_sensitivities(const Network& net) {
  net.validate();
  const int n = net.node_count;
  const auto edge_count = static_cast<Eigen::Index>(net.edges.size());

  std::vector<int> parent(n + 1, -1);
  std::vector<int> edge_into(n + 1, -1);
  for (int e = 0; e < static_cast<int>(net.edges.size()); ++e) {
    parent[net.edges[e].to] = net.edges[e].from;
    edge_into[net.edges[e].to] = e;
  }

  Sensitivities s;
  s.v0 = net.v0;
  s.H = Eigen::MatrixXd::Zero(edge_count, n);
  s.r.resize(edge_count);
  s.x.resize(edge_count);
  for (int e = 0; e < edge_count; ++e) {
    s.r(e) = net.edges[e].r;
    s.x(e) = net.edges[e].x;
  }
  // Column k marks the edges on node k's root path.
  for (int k = 1; k <= n; ++k) {
    for (int j = k; j != 0; j = parent[j]) s.H(edge_into[j], k - 1) = 1.0;
  }
  s.loss_gram = s.H.transpose() * s.r.asDiagonal() * s.H;
  s.R = -s.loss_gram;
  s.X = -(s.H.transpose() * s.x.asDiagonal() * s.H);
  return s;
}

void to_json(nlohmann::json& j, const Network& net) {
  j = nlohmann::json::object();
  j["node_count"] = net.node_count;
  auto edges = nlohmann::json::array();
  for (const auto& e : net.edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"r", e.r}, {"x", e.x}});
  j["edges"] = std::move(edges);
  j["v0"] = net.v0;
  auto loads = nlohmann::json::array();
  for (const auto& l : net.nominal_load) loads.push_back({{"p", l.p}, {"q", l.q}});
  j["nominal_load"] = std::move(loads);
}

void from_json(const nlohmann::json& j, Network& net) {
  net = Network{};
  j.at("node_count").get_to(net.node_count);
  j.at("v0").get_to(net.v0);
  for (const auto& e : j.at("edges")) {
    net.edges.push_back({e.at("from").get<int>(), e.at("to").get<int>(), e.at("r").get<double>(),
                         e.at("x").get<double>()});
  }
  for (const auto& l : j.at("nominal_load")) {
    net.nominal_load.push_back({l.at("p").get<double>(), l.at("q").get<double>()});
  }
  net.validate();
}

}  // namespace dlmp
