#include "sindybrid/lp_format.hpp"

#include "sindybrid/error.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace sindybrid {

namespace {

std::string number(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

// Appends "+ 3 x" style terms, breaking lines well below the 510-character limit.
void write_terms(std::ostringstream& os, const std::vector<std::pair<std::string, double>>& terms)
{
    std::size_t width = 0;
    bool first = true;
    for (const auto& [name, c] : terms) {
        std::string t;
        if (first) {
            t = (c < 0 ? "- " : "") + number(std::abs(c)) + " " + name;
        } else {
            t = (c < 0 ? " - " : " + ") + number(std::abs(c)) + " " + name;
        }
        if (width + t.size() > 200) {
            os << "\n  ";
            width = 2;
        }
        os << t;
        width += t.size();
        first = false;
    }
    if (first) {
        os << "0 " << "s";
    }
}

} // namespace

std::string export_lp(const MilpProblem& p)
{
    std::ostringstream os;
    os << "\\ sparse hybrid identification, rows=" << p.rows << " n_lib=" << p.n_lib << " n_states=" << p.n_states
       << "\n";
    os << "Minimize\n obj: ";
    std::vector<std::pair<std::string, double>> terms;
    for (int v = 0; v < p.num_vars(); ++v) {
        if (p.cost[v] != 0.0) {
            terms.emplace_back(p.names[static_cast<std::size_t>(v)], p.cost[v]);
        }
    }
    write_terms(os, terms);
    os << "\nSubject To\n";
    for (std::size_t k = 0; k < p.constraints.size(); ++k) {
        const auto& c = p.constraints[k];
        terms.clear();
        for (const auto& [v, a] : c.coefs) {
            terms.emplace_back(p.names[static_cast<std::size_t>(v)], a);
        }
        os << " c" << k << ": ";
        write_terms(os, terms);
        switch (c.sense) {
        case RowSense::le:
            os << " <= ";
            break;
        case RowSense::ge:
            os << " >= ";
            break;
        case RowSense::eq:
            os << " = ";
            break;
        }
        os << number(c.rhs) << "\n";
    }
    os << "Bounds\n";
    for (int v = 0; v < p.num_vars(); ++v) {
        const auto& name = p.names[static_cast<std::size_t>(v)];
        const double lo = p.lower[v], up = p.upper[v];
        if (p.kind[static_cast<std::size_t>(v)] == VarKind::binary) {
            continue;
        }
        if (!std::isfinite(lo) && !std::isfinite(up)) {
            os << " " << name << " free\n";
        } else if (lo == 0.0 && !std::isfinite(up)) {
            continue;
        } else {
            os << " " << (std::isfinite(lo) ? number(lo) : "-inf") << " <= " << name << " <= "
               << (std::isfinite(up) ? number(up) : "+inf") << "\n";
        }
    }
    os << "Binaries\n";
    for (int v = 0; v < p.num_vars(); ++v) {
        if (p.kind[static_cast<std::size_t>(v)] == VarKind::binary) {
            os << " " << p.names[static_cast<std::size_t>(v)] << "\n";
        }
    }
    os << "Generals\n";
    for (int v = 0; v < p.num_vars(); ++v) {
        if (p.kind[static_cast<std::size_t>(v)] == VarKind::integer) {
            os << " " << p.names[static_cast<std::size_t>(v)] << "\n";
        }
    }
    os << "End\n";
    return os.str();
}

void export_lp(const MilpProblem& problem, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) {
        throw Error("cannot open " + path.string() + " for writing");
    }
    out << export_lp(problem);
    if (!out) {
        throw Error("failed writing " + path.string());
    }
}

namespace {

enum class Section { none, objective, constraints, bounds, binaries, generals, end };

double parse_value(const std::string& tok)
{
    if (tok == "+inf" || tok == "inf" || tok == "+infinity" || tok == "infinity") {
        return std::numeric_limits<double>::infinity();
    }
    if (tok == "-inf" || tok == "-infinity") {
        return -std::numeric_limits<double>::infinity();
    }
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(tok, &used);
    } catch (const std::exception&) {
        throw ConfigError("LP parse: bad number '" + tok + "'");
    }
    if (used != tok.size()) {
        throw ConfigError("LP parse: bad number '" + tok + "'");
    }
    return v;
}

bool is_number(const std::string& tok)
{
    if (tok.empty()) {
        return false;
    }
    const char c = tok[0];
    return (c >= '0' && c <= '9') || c == '.';
}

// Parses "a x + b y - z" into coefficients.
std::map<std::string, double> parse_linear(const std::vector<std::string>& toks)
{
    std::map<std::string, double> out;
    double sign = 1.0;
    double coef = 1.0;
    bool have_coef = false;
    for (const auto& t : toks) {
        if (t == "+") {
            sign = 1.0;
        } else if (t == "-") {
            sign = -1.0;
        } else if (is_number(t)) {
            coef = parse_value(t);
            have_coef = true;
        } else {
            out[t] += sign * (have_coef ? coef : 1.0);
            sign = 1.0;
            coef = 1.0;
            have_coef = false;
        }
    }
    return out;
}

} // namespace

ParsedLp parse_lp(const std::string& text)
{
    ParsedLp out;
    Section section = Section::none;
    std::istringstream in(text);
    std::string line;
    std::vector<std::string> pending;
    std::string pending_name;

    auto flush_row = [&](const std::vector<std::string>& toks, const std::string& name) {
        std::size_t k = 0;
        while (k < toks.size() && toks[k] != "<=" && toks[k] != ">=" && toks[k] != "=") {
            ++k;
        }
        if (k + 2 != toks.size()) {
            throw ConfigError("LP parse: malformed constraint " + name);
        }
        ParsedLp::Row row;
        row.name = name;
        row.coefs = parse_linear(std::vector<std::string>(toks.begin(), toks.begin() + static_cast<long>(k)));
        row.sense = toks[k] == "<=" ? RowSense::le : (toks[k] == ">=" ? RowSense::ge : RowSense::eq);
        row.rhs = parse_value(toks[k + 1]);
        out.rows.push_back(std::move(row));
    };

    auto tokens = [](const std::string& s) {
        std::istringstream ls(s);
        std::vector<std::string> v;
        std::string t;
        while (ls >> t) {
            v.push_back(t);
        }
        return v;
    };

    auto finish_pending = [&]() {
        if (pending.empty()) {
            return;
        }
        if (section == Section::objective) {
            out.objective = parse_linear(pending);
        } else if (section == Section::constraints) {
            flush_row(pending, pending_name);
        }
        pending.clear();
        pending_name.clear();
    };

    while (std::getline(in, line)) {
        if (!line.empty() && line[0] == '\\') {
            continue;
        }
        const auto toks = tokens(line);
        if (toks.empty()) {
            continue;
        }
        const std::string head = toks[0];
        Section next = Section::none;
        if (head == "Minimize") {
            next = Section::objective;
        } else if (head == "Subject" && toks.size() > 1 && toks[1] == "To") {
            next = Section::constraints;
        } else if (head == "Bounds") {
            next = Section::bounds;
        } else if (head == "Binaries") {
            next = Section::binaries;
        } else if (head == "Generals") {
            next = Section::generals;
        } else if (head == "End") {
            next = Section::end;
        }
        if (next != Section::none) {
            finish_pending();
            section = next;
            continue;
        }
        const bool continuation = line.size() > 1 && line[0] == ' ' && line[1] == ' ';
        switch (section) {
        case Section::objective:
        case Section::constraints: {
            std::size_t start = 0;
            if (!continuation && !toks.empty() && toks[0].back() == ':') {
                finish_pending();
                pending_name = toks[0].substr(0, toks[0].size() - 1);
                start = 1;
            }
            pending.insert(pending.end(), toks.begin() + static_cast<long>(start), toks.end());
            break;
        }
        case Section::bounds:
            if (toks.size() == 2 && toks[1] == "free") {
                out.bounds[toks[0]] = {-std::numeric_limits<double>::infinity(),
                                       std::numeric_limits<double>::infinity()};
            } else if (toks.size() == 5 && toks[1] == "<=" && toks[3] == "<=") {
                out.bounds[toks[2]] = {parse_value(toks[0]), parse_value(toks[4])};
            } else {
                throw ConfigError("LP parse: unsupported bound line '" + line + "'");
            }
            break;
        case Section::binaries:
            out.binaries.insert(toks.begin(), toks.end());
            break;
        case Section::generals:
            out.generals.insert(toks.begin(), toks.end());
            break;
        case Section::none:
        case Section::end:
            throw ConfigError("LP parse: content outside a section: '" + line + "'");
        }
    }
    finish_pending();
    if (section != Section::end) {
        throw ConfigError("LP parse: missing End");
    }
    return out;
}

} // namespace sindybrid
