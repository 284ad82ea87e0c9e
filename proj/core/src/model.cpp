#include "ergo/model.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ergo {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& msg) { throw ModelError("model: " + msg); }

void check_positive_rate(const RateFunction& f, long i, const char* what) {
    const double v = f(static_cast<double>(i));
    if (!std::isfinite(v)) bad(std::string(what) + " is non-finite at index " + std::to_string(i));
    if (!(v > 0.0)) bad(std::string(what) + " must be > 0, got " + std::to_string(v) +
                        " at index " + std::to_string(i));
}

// sample indices 0..64 plus a geometric sweep; rates on infinite index
// sets cannot be checked exhaustively
std::vector<long> probe_indices(long lo) {
    std::vector<long> idx;
    for (long i = lo; i <= 64; ++i) idx.push_back(i);
    for (long i = 128; i <= (1L << 20); i *= 2) idx.push_back(i);
    return idx;
}

RateFunction parse_field(const json& params, const char* key, const char* var) {
    if (!params.contains(key)) bad(std::string("missing field '") + key + "'");
    if (!params.at(key).is_string()) bad(std::string("field '") + key + "' must be a string expression");
    try {
        return parse_rate_expr(params.at(key).get<std::string>(), var);
    } catch (const ExprError& e) {
        bad(std::string("field '") + key + "': " + e.what());
    }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) ok = true;
        if (!ok) bad("unknown field '" + it.key() + "' in " + where);
    }
}

BirthDeathSpec parse_birth_death(const json& p) {
    reject_unknown(p, {"birth", "death"}, "birth_death params");
    BirthDeathSpec s;
    s.birth = parse_field(p, "birth", "i");
    s.death = parse_field(p, "death", "i");
    validate(s);
    return s;
}

SingleDeathSpec parse_single_death(const json& p) {
    reject_unknown(p, {"q", "dimension", "max_jump", "tail_down", "tail_up"},
                   "single_death params");
    SingleDeathSpec s;
    if (!p.contains("q") || !p.at("q").is_array()) bad("single_death: 'q' must be an array of rows");
    for (const auto& row : p.at("q")) {
        if (!row.is_array()) bad("single_death: each row of 'q' must be an array");
        s.rows.push_back(row.get<std::vector<double>>());
    }
    s.n_explicit = p.value("dimension", static_cast<long>(s.rows.size()));
    s.max_jump = p.value("max_jump", 1);
    if (p.contains("tail_down")) {
        s.tail_down = parse_rate_expr(p.at("tail_down").get<std::string>(), "i");
        if (!p.contains("tail_up")) bad("single_death: tail_down requires tail_up");
        for (const auto& e : p.at("tail_up")) s.tail_up.push_back(parse_rate_expr(e.get<std::string>(), "i"));
    }
    validate(s);
    return s;
}

TreeSpec parse_tree(const json& p) {
    reject_unknown(p, {"nodes", "up", "down", "tail"}, "tree params");
    TreeSpec s;
    if (!p.contains("nodes")) bad("tree: missing 'nodes' (parent array, -1 for the root)");
    s.parent = p.at("nodes").get<std::vector<int>>();
    s.up = p.value("up", std::vector<double>{});
    s.down = p.value("down", std::vector<double>{});
    if (p.contains("tail")) {
        for (const auto& r : p.at("tail")) {
            TreeSpec::Ray ray;
            ray.attach = r.at("node").get<int>();
            ray.up = parse_rate_expr(r.at("up").get<std::string>(), "i");
            ray.down = parse_rate_expr(r.at("down").get<std::string>(), "i");
            s.rays.push_back(std::move(ray));
        }
    }
    validate(s);
    return s;
}

DiffusionSpec parse_diffusion(const json& p) {
    DiffusionSpec s;
    if (p.contains("beta_bar")) {
        reject_unknown(p, {"beta_bar", "r0", "D"}, "diffusion (radial) params");
        DiffusionSpec::Radial r;
        r.beta_bar = parse_field(p, "beta_bar", "r");
        r.r0 = p.value("r0", 0.0);
        r.D = p.value("D", std::numeric_limits<double>::infinity());
        s.radial = std::move(r);
    } else {
        reject_unknown(p, {"a", "b"}, "diffusion params");
        s.a = parse_field(p, "a", "x");
        s.b = parse_field(p, "b", "x");
    }
    validate(s);
    return s;
}

StableSdeSpec parse_stable(const json& p) {
    reject_unknown(p, {"alpha", "dim", "drift_radial"}, "stable_sde params");
    StableSdeSpec s;
    if (!p.contains("alpha")) bad("stable_sde: missing 'alpha'");
    s.alpha = p.at("alpha").get<double>();
    s.dim = p.value("dim", 1);
    s.drift_radial = parse_field(p, "drift_radial", "r");
    validate(s);
    return s;
}

TimeChangedStableSpec parse_tc_stable(const json& p) {
    reject_unknown(p, {"alpha", "a"}, "tc_stable params");
    TimeChangedStableSpec s;
    if (!p.contains("alpha")) bad("tc_stable: missing 'alpha'");
    s.alpha = p.at("alpha").get<double>();
    s.a = parse_field(p, "a", "x");
    validate(s);
    return s;
}

NumericsOverrides parse_numerics(const json& n) {
    reject_unknown(n, {"rel", "abs", "max_terms", "max_evals", "truncation"}, "numerics");
    NumericsOverrides o;
    if (n.contains("rel")) o.rel = n.at("rel").get<double>();
    if (n.contains("abs")) o.abs = n.at("abs").get<double>();
    if (n.contains("max_terms")) o.max_terms = n.at("max_terms").get<long>();
    if (n.contains("max_evals")) o.max_evals = n.at("max_evals").get<long>();
    if (n.contains("truncation")) o.truncation = n.at("truncation").get<long>();
    return o;
}

} // namespace

double SingleDeathSpec::rate(long i, long j) const {
    if (i < 0 || j < 0) return 0.0;
    if (i < n_explicit) {
        const auto& row = rows[static_cast<std::size_t>(i)];
        return j < static_cast<long>(row.size()) ? row[static_cast<std::size_t>(j)] : 0.0;
    }
    if (!has_tail()) return 0.0;
    if (j == i - 1) return (*tail_down)(static_cast<double>(i));
    if (j > i && j <= i + max_jump) {
        const long k = j - i;
        if (k <= static_cast<long>(tail_up.size()))
            return tail_up[static_cast<std::size_t>(k - 1)](static_cast<double>(i));
    }
    return 0.0;
}

std::vector<std::vector<int>> TreeSpec::children() const {
    std::vector<std::vector<int>> ch(parent.size());
    for (std::size_t i = 1; i < parent.size(); ++i) ch[static_cast<std::size_t>(parent[i])].push_back(static_cast<int>(i));
    return ch;
}

std::vector<int> TreeSpec::depth() const {
    std::vector<int> d(parent.size(), 0);
    for (std::size_t i = 1; i < parent.size(); ++i) d[i] = d[static_cast<std::size_t>(parent[i])] + 1;
    return d;
}

Tolerance NumericsOverrides::apply(Tolerance base) const {
    if (rel) base.rel = *rel;
    if (abs) base.abs = *abs;
    if (max_terms) base.max_terms = *max_terms;
    if (max_evals) base.max_evals = *max_evals;
    base.validate();
    return base;
}

void validate(const BirthDeathSpec& s) {
    if (!s.birth.valid() || !s.death.valid()) bad("birth_death: missing rate functions");
    for (long i : probe_indices(0)) check_positive_rate(s.birth, i, "birth rate b_i");
    for (long i : probe_indices(1)) check_positive_rate(s.death, i, "death rate a_i");
}

void validate(const SingleDeathSpec& s) {
    if (s.n_explicit < 1) bad("single_death: dimension must be >= 1");
    if (static_cast<long>(s.rows.size()) != s.n_explicit)
        bad("single_death: 'q' must have exactly 'dimension' rows");
    if (s.max_jump < 1) bad("single_death: max_jump must be >= 1");
    for (long i = 0; i < s.n_explicit; ++i) {
        const auto& row = s.rows[static_cast<std::size_t>(i)];
        double rowsum = 0.0;
        for (long j = 0; j < static_cast<long>(row.size()); ++j) {
            const double v = row[static_cast<std::size_t>(j)];
            if (!std::isfinite(v) || v < 0.0)
                bad("single_death: q[" + std::to_string(i) + "][" + std::to_string(j) +
                    "] must be finite and >= 0");
            if (j < i - 1 && v != 0.0)
                bad("single_death: q[" + std::to_string(i) + "][" + std::to_string(j) +
                    "] breaks the single-death structure (down jumps only by 1)");
            if (j != i) rowsum += v;
        }
        if (i >= 1 && !(s.rate(i, i - 1) > 0.0))
            bad("single_death: q_{i,i-1} must be > 0 at i = " + std::to_string(i));
        for (long j = i + s.max_jump + 1; j < static_cast<long>(row.size()); ++j)
            if (row[static_cast<std::size_t>(j)] != 0.0)
                bad("single_death: row " + std::to_string(i) + " jumps beyond max_jump");
        if (!std::isfinite(rowsum)) bad("single_death: infinite row sum at " + std::to_string(i));
    }
    if (s.has_tail()) {
        if (static_cast<int>(s.tail_up.size()) > s.max_jump)
            bad("single_death: more tail_up entries than max_jump");
        for (long i : probe_indices(std::max<long>(1, s.n_explicit)))
            check_positive_rate(*s.tail_down, i, "tail q_{i,i-1}");
    }
}

void validate(const TreeSpec& s) {
    const long n = s.size();
    if (n < 1) bad("tree: empty node set");
    if (s.parent[0] != -1) bad("tree: node 0 must be the root (parent -1)");
    if (static_cast<long>(s.up.size()) != n || static_cast<long>(s.down.size()) != n)
        bad("tree: 'up' and 'down' must have one entry per node (entry 0 ignored)");
    auto d = s.depth();
    for (long i = 1; i < n; ++i) {
        const int p = s.parent[static_cast<std::size_t>(i)];
        if (p < 0 || p >= n) bad("tree: node " + std::to_string(i) + " has invalid parent");
        if (p >= i) bad("tree: nodes must be listed parents-first (parent " + std::to_string(p) +
                        " >= node " + std::to_string(i) + ")");
        if (d[static_cast<std::size_t>(i)] != d[static_cast<std::size_t>(p)] + 1)
            bad("tree: inconsistent depth at node " + std::to_string(i));
        if (!(s.up[static_cast<std::size_t>(i)] > 0.0) || !(s.down[static_cast<std::size_t>(i)] > 0.0))
            bad("tree: edge rates at node " + std::to_string(i) + " must be > 0");
    }
    auto ch = s.children();
    for (const auto& ray : s.rays) {
        if (ray.attach < 0 || ray.attach >= n) bad("tree: ray attach node out of range");
        if (!ch[static_cast<std::size_t>(ray.attach)].empty())
            bad("tree: rays may only extend leaves (node " + std::to_string(ray.attach) + ")");
        for (long k : probe_indices(1)) {
            check_positive_rate(ray.up, k, "ray up rate");
            check_positive_rate(ray.down, k, "ray down rate");
        }
    }
}

void validate(const DiffusionSpec& s) {
    if (s.is_radial()) {
        const auto& r = *s.radial;
        if (!(r.D > r.r0)) bad("diffusion radial: D must exceed r0");
        const double probe = r.r0 + std::min(1.0, (std::isfinite(r.D) ? r.D - r.r0 : 1.0)) / 2;
        if (!std::isfinite(r.beta_bar(probe))) bad("diffusion radial: beta_bar non-finite");
        return;
    }
    if (!s.a.valid() || !s.b.valid()) bad("diffusion: missing coefficient functions");
    for (double x : {0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0, 64.0, 256.0}) {
        const double av = s.a(x);
        if (!std::isfinite(av) || !(av > 0.0))
            bad("diffusion: a(x) must be finite and > 0, got " + std::to_string(av) + " at x = " +
                std::to_string(x));
        if (!std::isfinite(s.b(x)))
            bad("diffusion: b(x) non-finite at x = " + std::to_string(x));
    }
}

void validate(const StableSdeSpec& s) {
    if (!(s.alpha > 0.0 && s.alpha < 2.0)) bad("stable_sde: alpha must lie in (0,2)");
    if (s.dim < 1) bad("stable_sde: dim must be >= 1");
    if (!s.drift_radial.valid()) bad("stable_sde: missing drift_radial");
    for (double r : {1.0, 2.0, 8.0, 64.0})
        if (!std::isfinite(s.drift_radial(r))) bad("stable_sde: drift_radial non-finite at r = " + std::to_string(r));
}

void validate(const TimeChangedStableSpec& s) {
    if (!(s.alpha > 1.0 && s.alpha < 2.0)) bad("tc_stable: alpha must lie in (1,2)");
    if (!s.a.valid()) bad("tc_stable: missing speed function a");
    for (double x : {-64.0, -8.0, -1.0, 0.0, 1.0, 8.0, 64.0}) {
        const double v = s.a(x);
        if (!std::isfinite(v) || !(v > 0.0))
            bad("tc_stable: a(x) must be finite and > 0, got " + std::to_string(v) + " at x = " +
                std::to_string(x));
    }
}

void validate(const ModelSpec& s) {
    std::visit([](const auto& m) { validate(m); }, s);
}

const char* family_name(const ModelSpec& spec) {
    struct Visitor {
        const char* operator()(const BirthDeathSpec&) const { return "birth_death"; }
        const char* operator()(const SingleDeathSpec&) const { return "single_death"; }
        const char* operator()(const TreeSpec&) const { return "tree"; }
        const char* operator()(const DiffusionSpec&) const { return "diffusion"; }
        const char* operator()(const StableSdeSpec&) const { return "stable_sde"; }
        const char* operator()(const TimeChangedStableSpec&) const { return "tc_stable"; }
    };
    return std::visit(Visitor{}, spec);
}

ModelDocument load_model_text(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        bad(std::string("JSON parse error: ") + e.what());
    }
    if (!doc.is_object()) bad("document root must be an object");
    reject_unknown(doc, {"family", "params", "numerics"}, "document root");
    if (!doc.contains("family")) bad("missing 'family'");
    if (!doc.contains("params")) bad("missing 'params'");
    const std::string family = doc.at("family").get<std::string>();
    const json& p = doc.at("params");

    ModelDocument out;
    out.family = family;
    if (family == "birth_death")
        out.spec = parse_birth_death(p);
    else if (family == "single_death")
        out.spec = parse_single_death(p);
    else if (family == "tree")
        out.spec = parse_tree(p);
    else if (family == "diffusion")
        out.spec = parse_diffusion(p);
    else if (family == "stable_sde")
        out.spec = parse_stable(p);
    else if (family == "tc_stable")
        out.spec = parse_tc_stable(p);
    else
        bad("unknown family '" + family + "'");

    if (doc.contains("numerics")) out.numerics = parse_numerics(doc.at("numerics"));
    return out;
}

ModelDocument load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("model: cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_model_text(ss.str());
}

} // namespace ergo
