#include "deskdta/smiles.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <map>
#include <optional>

namespace dta {

namespace {

[[noreturn]] void parse_fail(const std::string& msg, size_t offset) {
  throw Error(ErrorKind::Parse,
              msg + " at byte " + std::to_string(offset),
              static_cast<int64_t>(offset));
}

int standard_valence(const std::string& element) {
  if (element == "C") return 4;
  if (element == "N" || element == "B" || element == "P") return 3;
  if (element == "O" || element == "S") return 2;
  if (element == "F" || element == "Cl" || element == "Br" || element == "I")
    return 1;
  return -1;  // no implicit-hydrogen rule
}

double bond_order_value(BondOrder o) {
  switch (o) {
    case BondOrder::Single: return 1.0;
    case BondOrder::Double: return 2.0;
    case BondOrder::Triple: return 3.0;
    case BondOrder::Aromatic: return 1.5;
  }
  return 1.0;
}

struct RingOpen {
  int32_t atom;
  std::optional<BondOrder> order;
  size_t offset;
};

struct Parser {
  std::string_view s;
  size_t p = 0;
  MolGraph g;
  int32_t prev = -1;
  std::optional<BondOrder> pending;
  size_t pending_offset = 0;
  std::vector<std::pair<int32_t, size_t>> branch_stack;  // atom, '(' offset
  std::map<int, RingOpen> ring_open;

  void add_atom(AtomRecord atom) {
    const int32_t idx = static_cast<int32_t>(g.atoms.size());
    g.atoms.push_back(std::move(atom));
    if (prev == -1) {
      ++g.fragment_count;
      if (pending) parse_fail("dangling bond", pending_offset);
    } else {
      add_bond(prev, idx, take_pending(prev, idx));
    }
    prev = idx;
  }

  BondOrder take_pending(int32_t a, int32_t b) {
    if (pending) {
      const BondOrder o = *pending;
      pending.reset();
      return o;
    }
    return g.atoms[a].aromatic && g.atoms[b].aromatic ? BondOrder::Aromatic
                                                     : BondOrder::Single;
  }

  void add_bond(int32_t a, int32_t b, BondOrder order) {
    if (a == b) parse_fail("ring bond to the same atom", p);
    if (a > b) std::swap(a, b);
    for (const auto& bd : g.bonds)
      if (bd.i == a && bd.j == b)
        parse_fail("duplicate bond between atoms " + std::to_string(a) +
                       " and " + std::to_string(b),
                   p);
    g.bonds.push_back({a, b, order});
  }

  void close_or_open_ring(int number, size_t digit_offset) {
    if (prev == -1) parse_fail("ring closure before any atom", digit_offset);
    auto it = ring_open.find(number);
    if (it == ring_open.end()) {
      ring_open[number] = RingOpen{prev, pending, digit_offset};
      pending.reset();
      return;
    }
    RingOpen open = it->second;
    ring_open.erase(it);
    BondOrder order;
    if (open.order && pending && *open.order != *pending)
      parse_fail("conflicting bond orders for ring bond " +
                     std::to_string(number),
                 digit_offset);
    if (open.order)
      order = *open.order;
    else if (pending)
      order = *pending;
    else
      order = g.atoms[open.atom].aromatic && g.atoms[prev].aromatic
                  ? BondOrder::Aromatic
                  : BondOrder::Single;
    pending.reset();
    add_bond(open.atom, prev, order);
  }

  void set_pending(BondOrder o) {
    if (pending) parse_fail("two bond symbols in a row", p);
    pending = o;
    pending_offset = p;
  }

  AtomRecord organic_atom(const std::string& element, bool aromatic) {
    AtomRecord a;
    a.element = element;
    a.aromatic = aromatic;
    return a;
  }

  AtomRecord parse_bracket() {
    const size_t start = p;
    ++p;  // '['
    AtomRecord a;
    a.explicit_h = 0;  // bracket atoms carry only the hydrogens they state
    while (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p])))
      ++p;  // isotope, discarded
    if (p >= s.size()) parse_fail("unterminated bracket atom", start);
    if (std::islower(static_cast<unsigned char>(s[p]))) {
      a.aromatic = true;
      if (p + 1 < s.size() && (s.compare(p, 2, "se") == 0 ||
                               s.compare(p, 2, "as") == 0)) {
        a.element = std::string(1, std::toupper(s[p])) + s[p + 1];
        p += 2;
      } else if (s[p] == 'b' || s[p] == 'c' || s[p] == 'n' || s[p] == 'o' ||
                 s[p] == 'p' || s[p] == 's') {
        a.element = std::string(1, std::toupper(s[p]));
        ++p;
      } else {
        parse_fail(std::string("unknown symbol '") + s[p] + "'", p);
      }
    } else if (std::isupper(static_cast<unsigned char>(s[p]))) {
      a.element = std::string(1, s[p]);
      ++p;
      if (p < s.size() && std::islower(static_cast<unsigned char>(s[p]))) {
        a.element += s[p];
        ++p;
      }
    } else {
      parse_fail(std::string("unknown symbol '") + s[p] + "'", p);
    }
    while (p < s.size() && s[p] == '@') ++p;  // chirality, discarded
    if (p < s.size() && s[p] == 'H' && a.element != "H") {
      ++p;
      int h = 1;
      if (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p]))) {
        h = 0;
        while (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p])))
          h = h * 10 + (s[p++] - '0');
      }
      a.explicit_h = h;
    }
    if (p < s.size() && (s[p] == '+' || s[p] == '-')) {
      const char sign = s[p];
      int magnitude = 1;
      ++p;
      if (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p]))) {
        magnitude = 0;
        while (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p])))
          magnitude = magnitude * 10 + (s[p++] - '0');
      } else {
        while (p < s.size() && s[p] == sign) {
          ++magnitude;
          ++p;
        }
      }
      a.formal_charge = sign == '+' ? magnitude : -magnitude;
    }
    if (p < s.size() && s[p] == ':') {  // atom class, discarded
      ++p;
      if (p >= s.size() || !std::isdigit(static_cast<unsigned char>(s[p])))
        parse_fail("expected atom class number", p);
      while (p < s.size() && std::isdigit(static_cast<unsigned char>(s[p])))
        ++p;
    }
    if (p >= s.size() || s[p] != ']')
      parse_fail("unterminated bracket atom", start);
    ++p;  // ']'
    return a;
  }

  void run() {
    while (p < s.size()) {
      const char c = s[p];
      switch (c) {
        case '(':
          if (prev == -1) parse_fail("branch before any atom", p);
          branch_stack.emplace_back(prev, p);
          ++p;
          break;
        case ')':
          if (branch_stack.empty()) parse_fail("unbalanced parenthesis", p);
          if (pending) parse_fail("dangling bond", pending_offset);
          prev = branch_stack.back().first;
          branch_stack.pop_back();
          ++p;
          break;
        case '-': set_pending(BondOrder::Single); ++p; break;
        case '=': set_pending(BondOrder::Double); ++p; break;
        case '#': set_pending(BondOrder::Triple); ++p; break;
        case ':': set_pending(BondOrder::Aromatic); ++p; break;
        case '/':
        case '\\':
          // stereo bonds carry no geometry here, they bond as single
          set_pending(BondOrder::Single);
          ++p;
          break;
        case '.':
          if (pending) parse_fail("dangling bond", pending_offset);
          prev = -1;
          ++p;
          break;
        case '%': {
          if (p + 2 >= s.size() ||
              !std::isdigit(static_cast<unsigned char>(s[p + 1])) ||
              !std::isdigit(static_cast<unsigned char>(s[p + 2])))
            parse_fail("expected two digits after %", p);
          const int number = (s[p + 1] - '0') * 10 + (s[p + 2] - '0');
          close_or_open_ring(number, p);
          p += 3;
          break;
        }
        case '[': {
          AtomRecord a = parse_bracket();
          add_atom(std::move(a));
          break;
        }
        default: {
          if (std::isdigit(static_cast<unsigned char>(c))) {
            close_or_open_ring(c - '0', p);
            ++p;
            break;
          }
          if (c == 'C' && p + 1 < s.size() && s[p + 1] == 'l') {
            add_atom(organic_atom("Cl", false));
            p += 2;
            break;
          }
          if (c == 'B' && p + 1 < s.size() && s[p + 1] == 'r') {
            add_atom(organic_atom("Br", false));
            p += 2;
            break;
          }
          switch (c) {
            case 'B': case 'C': case 'N': case 'O':
            case 'P': case 'S': case 'F': case 'I':
              add_atom(organic_atom(std::string(1, c), false));
              ++p;
              break;
            case 'b': case 'c': case 'n': case 'o':
            case 'p': case 's':
              add_atom(
                  organic_atom(std::string(1, std::toupper(c)), true));
              ++p;
              break;
            default:
              parse_fail(std::string("unknown symbol '") + c + "'", p);
          }
        }
      }
    }
    if (pending) parse_fail("dangling bond", pending_offset);
    if (!branch_stack.empty())
      parse_fail("unbalanced parenthesis", branch_stack.back().second);
    if (!ring_open.empty())
      parse_fail(
          "unclosed ring bond " + std::to_string(ring_open.begin()->first),
          s.size());
    if (g.atoms.empty()) parse_fail("no atoms", 0);
  }
};

// Marks atoms that sit on at least one cycle: every endpoint of a
// non-bridge edge. Bridges come from an iterative lowlink traversal.
void mark_ring_atoms(MolGraph& g) {
  const int32_t n = static_cast<int32_t>(g.atoms.size());
  std::vector<std::vector<std::pair<int32_t, int32_t>>> adj(n);  // (nbr, bond)
  for (int32_t b = 0; b < static_cast<int32_t>(g.bonds.size()); ++b) {
    adj[g.bonds[b].i].emplace_back(g.bonds[b].j, b);
    adj[g.bonds[b].j].emplace_back(g.bonds[b].i, b);
  }
  std::vector<int32_t> disc(n, -1), low(n, 0);
  std::vector<char> is_bridge(g.bonds.size(), 0);
  int32_t timer = 0;
  struct Frame {
    int32_t node;
    int32_t parent_bond;
    size_t next_child = 0;
  };
  for (int32_t root = 0; root < n; ++root) {
    if (disc[root] != -1) continue;
    std::vector<Frame> stack{{root, -1}};
    disc[root] = low[root] = timer++;
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next_child < adj[f.node].size()) {
        const auto [nbr, bond] = adj[f.node][f.next_child++];
        if (bond == f.parent_bond) continue;
        if (disc[nbr] == -1) {
          disc[nbr] = low[nbr] = timer++;
          stack.push_back({nbr, bond});
        } else {
          low[f.node] = std::min(low[f.node], disc[nbr]);
        }
      } else {
        stack.pop_back();
        if (!stack.empty()) {
          Frame& parent = stack.back();
          low[parent.node] = std::min(low[parent.node], low[f.node]);
          if (low[f.node] > disc[parent.node]) is_bridge[f.parent_bond] = 1;
        }
      }
    }
  }
  for (size_t b = 0; b < g.bonds.size(); ++b) {
    if (is_bridge[b]) continue;
    g.atoms[g.bonds[b].i].in_ring = true;
    g.atoms[g.bonds[b].j].in_ring = true;
  }
}

void resolve_hydrogens_and_degrees(MolGraph& g) {
  std::vector<double> order_sum(g.atoms.size(), 0.0);
  for (const auto& b : g.bonds) {
    g.atoms[b.i].degree += 1;
    g.atoms[b.j].degree += 1;
    order_sum[b.i] += bond_order_value(b.order);
    order_sum[b.j] += bond_order_value(b.order);
  }
  for (size_t i = 0; i < g.atoms.size(); ++i) {
    AtomRecord& a = g.atoms[i];
    if (a.explicit_h >= 0) {
      a.h_count = a.explicit_h;
      continue;
    }
    const int v = standard_valence(a.element);
    a.h_count = v < 0 ? 0
                      : std::max(0, v - static_cast<int>(
                                          std::ceil(order_sum[i] - 1e-9)));
  }
}

}  // namespace

MolGraph parse_smiles(std::string_view s) {
  if (s.empty()) fail(ErrorKind::Parse, "empty SMILES string");
  Parser parser;
  parser.s = s;
  parser.run();
  MolGraph g = std::move(parser.g);
  resolve_hydrogens_and_degrees(g);
  mark_ring_atoms(g);
  return g;
}

Tensor featurize_atoms(const MolGraph& g) {
  static const std::array<std::string_view, 12> kElements = {
      "C", "N", "O", "S", "F", "P", "Cl", "Br", "I", "B", "Si", "Se"};
  const int64_t n = static_cast<int64_t>(g.atoms.size());
  Tensor f = Tensor::zeros({n, kAtomFeatureDim});
  for (int64_t i = 0; i < n; ++i) {
    const AtomRecord& a = g.atoms[i];
    int64_t elem = 12;  // "other"
    for (size_t e = 0; e < kElements.size(); ++e)
      if (kElements[e] == a.element) {
        elem = static_cast<int64_t>(e);
        break;
      }
    f.at(i, elem) = 1.0;
    f.at(i, 13 + std::min<int64_t>(a.degree, 6)) = 1.0;
    f.at(i, 20 + std::min<int64_t>(a.h_count, 4)) = 1.0;
    f.at(i, 25 + std::clamp(a.formal_charge, -2, 2) + 2) = 1.0;
    if (a.aromatic) f.at(i, 30) = 1.0;
  }
  return f;
}

std::vector<Edge> molecule_edges(const MolGraph& g) {
  std::vector<Edge> e;
  e.reserve(g.bonds.size());
  for (const auto& b : g.bonds) e.emplace_back(b.i, b.j);
  return e;
}

}  // namespace dta
