#include "nofm/rule_io.hpp"

#include <algorithm>
#include <set>

namespace nofm {

namespace {

using nlohmann::json;

[[noreturn]] void fail(RuleErrorCode code, const std::string& msg) {
  throw RuleError(code, msg);
}

void require_keys(const json& j, std::initializer_list<const char*> keys) {
  for (const char* k : keys)
    if (!j.contains(k))
      fail(RuleErrorCode::malformed_syntax, std::string("missing key: ") + k);
  for (auto it = j.begin(); it != j.end(); ++it) {
    const bool known =
        std::any_of(keys.begin(), keys.end(),
                    [&](const char* k) { return it.key() == k; });
    if (!known)
      fail(RuleErrorCode::malformed_syntax, "unexpected key: " + it.key());
  }
}

std::string get_string(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_string())
    fail(RuleErrorCode::malformed_syntax, std::string(key) + " must be a string");
  return v.get<std::string>();
}

double get_number(const json& j, const char* key) {
  const auto& v = j.at(key);
  if (!v.is_number())
    fail(RuleErrorCode::malformed_syntax, std::string(key) + " must be a number");
  return v.get<double>();
}

CmpOp get_op(const json& j) {
  const std::string s = get_string(j, "op");
  if (s == ">") return CmpOp::gt;
  if (s == ">=") return CmpOp::ge;
  if (s == "<") return CmpOp::lt;
  if (s == "<=") return CmpOp::le;
  fail(RuleErrorCode::malformed_syntax, "bad op: " + s);
}

const FeatureInfo& lookup(const FeatureCatalog& meta, const std::string& name) {
  const FeatureInfo* f = meta.find(name);
  if (!f) fail(RuleErrorCode::unknown_feature, "unknown feature: " + name);
  return *f;
}

const FeatureInfo& lookup_kind(const FeatureCatalog& meta,
                               const std::string& name, FeatureKind kind) {
  const FeatureInfo& f = lookup(meta, name);
  if (f.kind != kind)
    fail(RuleErrorCode::type_mismatch,
         name + " is " + to_string(f.kind) + ", expected " + to_string(kind));
  return f;
}

std::string trim(std::string s) {
  const auto from = s.find_first_not_of(" \t");
  const auto to = s.find_last_not_of(" \t");
  if (from == std::string::npos) return {};
  return s.substr(from, to - from + 1);
}

// Only `a/b` and `a-b` over two catalog features are representable. Every
// operator position is tried; exactly one split may resolve to known
// features, otherwise the expression is rejected.
DerivedExpr parse_expr(const std::string& expr, const FeatureCatalog& meta) {
  struct Split {
    DerivedOp op;
    std::string left, right;
  };
  std::vector<Split> valid;
  bool saw_operator = false;
  for (std::size_t i = 0; i < expr.size(); ++i) {
    if (expr[i] != '/' && expr[i] != '-') continue;
    saw_operator = true;
    const std::string left = trim(expr.substr(0, i));
    const std::string right = trim(expr.substr(i + 1));
    if (left.empty() || right.empty()) continue;
    if (meta.find(left) && meta.find(right))
      valid.push_back({expr[i] == '/' ? DerivedOp::ratio : DerivedOp::difference,
                       left, right});
  }
  if (valid.size() == 1) {
    lookup_kind(meta, valid[0].left, FeatureKind::numeric);
    lookup_kind(meta, valid[0].right, FeatureKind::numeric);
    return {valid[0].op, valid[0].left, valid[0].right};
  }
  if (valid.size() > 1)
    fail(RuleErrorCode::invalid_parameter, "ambiguous expr: " + expr);
  if (saw_operator)
    fail(RuleErrorCode::unknown_feature, "expr references unknown features: " + expr);
  fail(RuleErrorCode::invalid_parameter,
       "expr must be <feature>/<feature> or <feature>-<feature>: " + expr);
}

Rule parse_node(const json& j, const FeatureCatalog& meta, int depth_budget);

Rule parse_logical(const json& j, const FeatureCatalog& meta,
                   int depth_budget) {
  if (depth_budget <= 0)
    fail(RuleErrorCode::depth_exceeded, "logical nesting exceeds max depth");
  require_keys(j, {"type", "op", "rules"});
  const std::string op = get_string(j, "op");
  if (op != "and" && op != "or")
    fail(RuleErrorCode::malformed_syntax, "logical op must be and|or");
  const auto& rules = j.at("rules");
  if (!rules.is_array() || rules.size() < 2)
    fail(RuleErrorCode::invalid_parameter,
         "logical requires a list of at least 2 rules");
  Logical node;
  node.op = op == "and" ? BoolOp::logical_and : BoolOp::logical_or;
  for (const auto& child : rules)
    node.rules.push_back(parse_node(child, meta, depth_budget - 1));
  return Rule{std::move(node)};
}

Rule parse_node(const json& j, const FeatureCatalog& meta, int depth_budget) {
  if (!j.is_object())
    fail(RuleErrorCode::malformed_syntax, "rule must be a JSON object");
  if (!j.contains("type") || !j.at("type").is_string())
    fail(RuleErrorCode::malformed_syntax, "rule needs a string \"type\"");
  const std::string type = j.at("type").get<std::string>();

  if (type == "numeric_threshold") {
    require_keys(j, {"type", "feature", "op", "threshold"});
    const std::string feature = get_string(j, "feature");
    lookup_kind(meta, feature, FeatureKind::numeric);
    return Rule{NumericThreshold{feature, get_op(j), get_number(j, "threshold")}};
  }
  if (type == "numeric_range") {
    require_keys(j, {"type", "feature", "low", "high"});
    const std::string feature = get_string(j, "feature");
    lookup_kind(meta, feature, FeatureKind::numeric);
    const double low = get_number(j, "low");
    const double high = get_number(j, "high");
    if (low > high)
      fail(RuleErrorCode::invalid_parameter, "range has low > high");
    return Rule{NumericRange{feature, low, high}};
  }
  if (type == "categorical_in") {
    require_keys(j, {"type", "feature", "in"});
    const std::string feature = get_string(j, "feature");
    lookup_kind(meta, feature, FeatureKind::categorical);
    const auto& arr = j.at("in");
    if (!arr.is_array() || arr.empty())
      fail(RuleErrorCode::invalid_parameter, "\"in\" must be a non-empty list");
    std::set<std::string> cats;
    for (const auto& c : arr) {
      if (!c.is_string())
        fail(RuleErrorCode::malformed_syntax, "category labels must be strings");
      cats.insert(c.get<std::string>());
    }
    return Rule{CategoricalIn{feature, {cats.begin(), cats.end()}}};
  }
  if (type == "binary_true") {
    require_keys(j, {"type", "feature"});
    const std::string feature = get_string(j, "feature");
    lookup_kind(meta, feature, FeatureKind::binary);
    return Rule{BinaryTrue{feature}};
  }
  if (type == "derived_numeric_threshold") {
    require_keys(j, {"type", "expr", "op", "threshold"});
    DerivedExpr expr = parse_expr(get_string(j, "expr"), meta);
    return Rule{DerivedThreshold{std::move(expr), get_op(j),
                                 get_number(j, "threshold")}};
  }
  if (type == "count_present") {
    require_keys(j, {"type", "features", "min_count"});
    const auto& arr = j.at("features");
    if (!arr.is_array() || arr.empty())
      fail(RuleErrorCode::invalid_parameter,
           "\"features\" must be a non-empty list");
    std::vector<std::string> features;
    std::set<std::string> seen;
    for (const auto& f : arr) {
      if (!f.is_string())
        fail(RuleErrorCode::malformed_syntax, "feature names must be strings");
      const std::string name = f.get<std::string>();
      lookup_kind(meta, name, FeatureKind::binary);
      if (!seen.insert(name).second)
        fail(RuleErrorCode::invalid_parameter, "duplicate feature: " + name);
      features.push_back(name);
    }
    const auto& mc = j.at("min_count");
    if (!mc.is_number_integer())
      fail(RuleErrorCode::malformed_syntax, "min_count must be an integer");
    const int min_count = mc.get<int>();
    if (min_count < 1 || static_cast<std::size_t>(min_count) > features.size())
      fail(RuleErrorCode::invalid_parameter,
           "min_count must be in [1, |features|]");
    return Rule{CountPresent{std::move(features), min_count}};
  }
  if (type == "logical") return parse_logical(j, meta, depth_budget);
  if (type == "percent_change") {
    require_keys(j, {"type", "feature_t0", "feature_t1", "pct", "op",
                     "direction"});
    const std::string t0 = get_string(j, "feature_t0");
    const std::string t1 = get_string(j, "feature_t1");
    lookup_kind(meta, t0, FeatureKind::numeric);
    lookup_kind(meta, t1, FeatureKind::numeric);
    const std::string dir = get_string(j, "direction");
    if (dir != "increase" && dir != "decrease")
      fail(RuleErrorCode::malformed_syntax,
           "direction must be increase|decrease");
    return Rule{PercentChange{
        t0, t1, get_number(j, "pct"), get_op(j),
        dir == "increase" ? ChangeDir::increase : ChangeDir::decrease}};
  }
  if (type == "zscore_threshold") {
    require_keys(j, {"type", "feature", "op", "z"});
    const std::string feature = get_string(j, "feature");
    lookup_kind(meta, feature, FeatureKind::numeric);
    return Rule{ZScoreThreshold{feature, get_op(j), get_number(j, "z")}};
  }
  if (type == "quantile_threshold") {
    require_keys(j, {"type", "feature", "op", "q"});
    const std::string feature = get_string(j, "feature");
    lookup_kind(meta, feature, FeatureKind::numeric);
    const double q = get_number(j, "q");
    if (!(q > 0.0 && q < 1.0))
      fail(RuleErrorCode::invalid_parameter, "q must be in (0,1)");
    return Rule{QuantileThreshold{feature, get_op(j), q}};
  }
  fail(RuleErrorCode::malformed_syntax, "unknown rule type: " + type);
}

}  // namespace

Rule rule_from_json(const json& j, const FeatureCatalog& meta, int max_depth) {
  return parse_node(j, meta, max_depth);
}

Rule parse_rule(std::string_view line, const FeatureCatalog& meta,
                int max_depth) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    fail(RuleErrorCode::malformed_syntax, e.what());
  }
  return parse_node(j, meta, max_depth);
}

namespace {

json node_to_json(const Rule& r) {
  struct Visitor {
    json operator()(const NumericThreshold& n) {
      return json{{"type", "numeric_threshold"},
                  {"feature", n.feature},
                  {"op", to_string(n.op)},
                  {"threshold", n.threshold}};
    }
    json operator()(const NumericRange& n) {
      return json{{"type", "numeric_range"},
                  {"feature", n.feature},
                  {"low", n.low},
                  {"high", n.high}};
    }
    json operator()(const CategoricalIn& n) {
      return json{{"type", "categorical_in"},
                  {"feature", n.feature},
                  {"in", n.categories}};
    }
    json operator()(const BinaryTrue& n) {
      return json{{"type", "binary_true"}, {"feature", n.feature}};
    }
    json operator()(const DerivedThreshold& n) {
      const char sep = n.expr.op == DerivedOp::ratio ? '/' : '-';
      return json{{"type", "derived_numeric_threshold"},
                  {"expr", n.expr.left + sep + n.expr.right},
                  {"op", to_string(n.op)},
                  {"threshold", n.threshold}};
    }
    json operator()(const CountPresent& n) {
      return json{{"type", "count_present"},
                  {"features", n.features},
                  {"min_count", n.min_count}};
    }
    json operator()(const Logical& n) {
      json rules = json::array();
      for (const Rule& child : n.rules) rules.push_back(node_to_json(child));
      return json{{"type", "logical"},
                  {"op", n.op == BoolOp::logical_and ? "and" : "or"},
                  {"rules", std::move(rules)}};
    }
    json operator()(const PercentChange& n) {
      return json{{"type", "percent_change"},
                  {"feature_t0", n.feature_t0},
                  {"feature_t1", n.feature_t1},
                  {"pct", n.pct},
                  {"op", to_string(n.op)},
                  {"direction",
                   n.direction == ChangeDir::increase ? "increase" : "decrease"}};
    }
    json operator()(const ZScoreThreshold& n) {
      return json{{"type", "zscore_threshold"},
                  {"feature", n.feature},
                  {"op", to_string(n.op)},
                  {"z", n.z}};
    }
    json operator()(const QuantileThreshold& n) {
      return json{{"type", "quantile_threshold"},
                  {"feature", n.feature},
                  {"op", to_string(n.op)},
                  {"q", n.q}};
    }
  };
  return std::visit(Visitor{}, r.node);
}

}  // namespace

json rule_to_json(const Rule& r) { return node_to_json(r); }

std::string serialize_rule(const Rule& r) { return node_to_json(r).dump(); }

}  // namespace nofm
