#include "nofm/rules.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace nofm {

const char* to_string(CmpOp op) {
  switch (op) {
    case CmpOp::gt: return ">";
    case CmpOp::ge: return ">=";
    case CmpOp::lt: return "<";
    case CmpOp::le: return "<=";
  }
  return "?";
}

CmpOp cmp_op_from_string(const std::string& s) {
  if (s == ">") return CmpOp::gt;
  if (s == ">=") return CmpOp::ge;
  if (s == "<") return CmpOp::lt;
  if (s == "<=") return CmpOp::le;
  throw std::invalid_argument("bad comparison op: " + s);
}

RuleFamily rule_family(const Rule& r) {
  struct Visitor {
    RuleFamily operator()(const NumericThreshold&) { return RuleFamily::threshold; }
    RuleFamily operator()(const NumericRange&) { return RuleFamily::range; }
    RuleFamily operator()(const CategoricalIn&) { return RuleFamily::categorical; }
    RuleFamily operator()(const BinaryTrue&) { return RuleFamily::binary; }
    RuleFamily operator()(const DerivedThreshold&) { return RuleFamily::derived; }
    RuleFamily operator()(const CountPresent&) { return RuleFamily::count; }
    RuleFamily operator()(const Logical&) { return RuleFamily::logical; }
    RuleFamily operator()(const PercentChange&) {
      return RuleFamily::temporal_distributional;
    }
    RuleFamily operator()(const ZScoreThreshold&) {
      return RuleFamily::temporal_distributional;
    }
    RuleFamily operator()(const QuantileThreshold&) {
      return RuleFamily::temporal_distributional;
    }
  };
  return std::visit(Visitor{}, r.node);
}

const char* to_string(RuleFamily f) {
  switch (f) {
    case RuleFamily::threshold: return "threshold";
    case RuleFamily::range: return "range";
    case RuleFamily::categorical: return "categorical";
    case RuleFamily::binary: return "binary";
    case RuleFamily::derived: return "derived";
    case RuleFamily::count: return "count";
    case RuleFamily::logical: return "logical";
    case RuleFamily::temporal_distributional: return "temporal_distributional";
  }
  return "?";
}

int logic_depth(const Rule& r) {
  if (const auto* l = std::get_if<Logical>(&r.node)) {
    int deepest = 0;
    for (const Rule& child : l->rules)
      deepest = std::max(deepest, logic_depth(child));
    return 1 + deepest;
  }
  return 0;
}

namespace {

void collect_features(const Rule& r, std::vector<std::string>& out) {
  struct Visitor {
    std::vector<std::string>& out;
    void operator()(const NumericThreshold& n) { out.push_back(n.feature); }
    void operator()(const NumericRange& n) { out.push_back(n.feature); }
    void operator()(const CategoricalIn& n) { out.push_back(n.feature); }
    void operator()(const BinaryTrue& n) { out.push_back(n.feature); }
    void operator()(const DerivedThreshold& n) {
      out.push_back(n.expr.left);
      out.push_back(n.expr.right);
    }
    void operator()(const CountPresent& n) {
      out.insert(out.end(), n.features.begin(), n.features.end());
    }
    void operator()(const Logical& n) {
      for (const Rule& child : n.rules) collect_features(child, out);
    }
    void operator()(const PercentChange& n) {
      out.push_back(n.feature_t0);
      out.push_back(n.feature_t1);
    }
    void operator()(const ZScoreThreshold& n) { out.push_back(n.feature); }
    void operator()(const QuantileThreshold& n) { out.push_back(n.feature); }
  };
  std::visit(Visitor{out}, r.node);
}

std::string fmt_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

std::vector<std::string> referenced_features(const Rule& r) {
  std::vector<std::string> out;
  collect_features(r, out);
  return out;
}

std::string describe(const Rule& r) {
  struct Visitor {
    std::string operator()(const NumericThreshold& n) {
      return n.feature + " " + to_string(n.op) + " " + fmt_num(n.threshold);
    }
    std::string operator()(const NumericRange& n) {
      return fmt_num(n.low) + " <= " + n.feature + " <= " + fmt_num(n.high);
    }
    std::string operator()(const CategoricalIn& n) {
      std::string s = n.feature + " in {";
      for (std::size_t i = 0; i < n.categories.size(); ++i) {
        if (i) s += ", ";
        s += n.categories[i];
      }
      return s + "}";
    }
    std::string operator()(const BinaryTrue& n) { return n.feature; }
    std::string operator()(const DerivedThreshold& n) {
      const char sep = n.expr.op == DerivedOp::ratio ? '/' : '-';
      return n.expr.left + sep + n.expr.right + " " + to_string(n.op) + " " +
             fmt_num(n.threshold);
    }
    std::string operator()(const CountPresent& n) {
      std::string s = "at least " + std::to_string(n.min_count) + " of {";
      for (std::size_t i = 0; i < n.features.size(); ++i) {
        if (i) s += ", ";
        s += n.features[i];
      }
      return s + "}";
    }
    std::string operator()(const Logical& n) {
      const char* sep = n.op == BoolOp::logical_and ? " and " : " or ";
      std::string s = "(";
      for (std::size_t i = 0; i < n.rules.size(); ++i) {
        if (i) s += sep;
        s += describe(n.rules[i]);
      }
      return s + ")";
    }
    std::string operator()(const PercentChange& n) {
      return n.feature_t1 + " vs " + n.feature_t0 + ": " +
             (n.direction == ChangeDir::increase ? "increase " : "decrease ") +
             to_string(n.op) + " " + fmt_num(n.pct * 100.0) + "%";
    }
    std::string operator()(const ZScoreThreshold& n) {
      return "z(" + n.feature + ") " + to_string(n.op) + " " + fmt_num(n.z);
    }
    std::string operator()(const QuantileThreshold& n) {
      return n.feature + " " + to_string(n.op) + " Q" + fmt_num(n.q) + "(" +
             n.feature + ")";
    }
  };
  return std::visit(Visitor{}, r.node);
}

}  // namespace nofm
