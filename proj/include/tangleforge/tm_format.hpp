#pragma once

#include "tangleforge/machine.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tangleforge {

struct TmParseError : std::runtime_error {
    int line;
    TmParseError(int ln, const std::string& msg)
        : std::runtime_error("line " + std::to_string(ln) + ": " + msg), line(ln) {}
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_ws(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    std::string w;
    while (in >> w) out.push_back(w);
    return out;
}

inline std::vector<std::string> split_list(const std::string& s, int line) {
    // "[a,b,c]" -> {"a","b","c"}
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
        throw TmParseError(line, "expected bracketed list, got '" + s + "'");
    std::vector<std::string> out;
    std::string cur;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        if (s[i] == ',') {
            out.push_back(trim(cur));
            cur.clear();
        } else {
            cur += s[i];
        }
    }
    if (!trim(cur).empty()) out.push_back(trim(cur));
    for (const std::string& x : out)
        if (x.empty()) throw TmParseError(line, "empty entry in list '" + s + "'");
    return out;
}

inline std::vector<double> parse_number_list(const std::string& s) {
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
        throw std::invalid_argument("expected [..] vector literal, got '" + s + "'");
    std::vector<double> out;
    std::string body = s.substr(1, s.size() - 2);
    std::istringstream in(body);
    std::string item;
    while (std::getline(in, item, ',')) {
        item = trim(item);
        if (item.empty()) throw std::invalid_argument("empty entry in vector literal");
        std::size_t pos = 0;
        out.push_back(std::stod(item, &pos));
        if (pos != item.size()) throw std::invalid_argument("bad number '" + item + "'");
    }
    return out;
}

/// Splits "[[1,0],[0,1]]" into row literals.
inline std::vector<std::string> split_rows(const std::string& s) {
    if (s.size() < 2 || s.front() != '[' || s.back() != ']')
        throw std::invalid_argument("expected [[..],[..]] matrix literal");
    std::vector<std::string> rows;
    int depth = 0;
    std::string cur;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
        const char ch = s[i];
        if (ch == '[') ++depth;
        if (ch == ']') --depth;
        if (ch == ',' && depth == 0) {
            rows.push_back(trim(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    if (!trim(cur).empty()) rows.push_back(trim(cur));
    return rows;
}

inline Eigen::MatrixXd parse_matrix(const std::string& s) {
    const std::vector<std::string> rows = split_rows(s);
    if (rows.empty()) throw std::invalid_argument("empty matrix literal");
    std::vector<std::vector<double>> vals;
    for (const std::string& r : rows) vals.push_back(parse_number_list(r));
    Eigen::MatrixXd m(vals.size(), vals[0].size());
    for (std::size_t i = 0; i < vals.size(); ++i) {
        if (vals[i].size() != vals[0].size())
            throw std::invalid_argument("ragged matrix literal");
        for (std::size_t j = 0; j < vals[i].size(); ++j) m(i, j) = vals[i][j];
    }
    return m;
}

} // namespace detail

/**
 * Colour literal syntax by quandle kind:
 *   dihedral      integer               "2"
 *   conjugation   cycle notation        "(1 2 3)", "()" = identity
 *   linear        vector                "[1.5, -2]"
 *   loglinear     positive vector       "[0.5, 3]"
 *   gaussian-ci   mean and covariance   "N([0, 1]; [[2, 0],[0, 1]])"
 * Hamiltonian colours are built programmatically and have no literal.
 */
inline Element element_from_string(const QuandleInstance& q, const std::string& raw) {
    const std::string s = detail::trim(raw);
    switch (q.kind) {
        case QuandleKind::dihedral: {
            std::size_t pos = 0;
            long v = 0;
            try {
                v = std::stol(s, &pos);
            } catch (const std::exception&) {
                throw std::invalid_argument("bad dihedral literal '" + s + "'");
            }
            if (pos != s.size()) throw std::invalid_argument("bad dihedral literal '" + s + "'");
            Element e = ((v % q.param) + q.param) % q.param;
            return e;
        }
        case QuandleKind::conjugation:
            return Permutation::from_cycles(s, q.param);
        case QuandleKind::linear:
        case QuandleKind::loglinear: {
            const std::vector<double> v = detail::parse_number_list(s);
            Eigen::VectorXd x(v.size());
            for (std::size_t i = 0; i < v.size(); ++i) x[i] = v[i];
            Element e = x;
            require_element(q, e);
            return e;
        }
        case QuandleKind::gaussian_ci: {
            if (s.size() < 4 || s.substr(0, 2) != "N(" || s.back() != ')')
                throw std::invalid_argument("bad gaussian literal '" + s + "'");
            const std::string body = s.substr(2, s.size() - 3);
            const std::size_t sep = body.find(';');
            if (sep == std::string::npos)
                throw std::invalid_argument("gaussian literal needs 'N(mean; cov)'");
            const std::vector<double> mu = detail::parse_number_list(detail::trim(body.substr(0, sep)));
            GaussianEstimator g;
            g.mean = Eigen::VectorXd(mu.size());
            for (std::size_t i = 0; i < mu.size(); ++i) g.mean[i] = mu[i];
            g.cov = detail::parse_matrix(detail::trim(body.substr(sep + 1)));
            Element e = g;
            require_element(q, e);
            return e;
        }
        case QuandleKind::hamiltonian:
            throw std::invalid_argument("hamiltonian colours have no text literal");
    }
    throw std::logic_error("element_from_string: unreachable");
}

inline std::string element_to_string(const QuandleInstance& q, const Element& e) {
    switch (q.kind) {
        case QuandleKind::dihedral: return std::to_string(std::get<long>(e));
        case QuandleKind::conjugation: return std::get<Permutation>(e).to_cycles();
        case QuandleKind::linear:
        case QuandleKind::loglinear: {
            const Eigen::VectorXd& v = std::get<Eigen::VectorXd>(e);
            std::string out = "[";
            for (int i = 0; i < v.size(); ++i) {
                if (i) out += ", ";
                out += format_double(v[i]);
            }
            return out + "]";
        }
        case QuandleKind::gaussian_ci: {
            const GaussianEstimator& g = std::get<GaussianEstimator>(e);
            std::string out = "N([";
            for (int i = 0; i < g.mean.size(); ++i) {
                if (i) out += ", ";
                out += format_double(g.mean[i]);
            }
            out += "]; [";
            for (int i = 0; i < g.cov.rows(); ++i) {
                if (i) out += ",";
                out += "[";
                for (int j = 0; j < g.cov.cols(); ++j) {
                    if (j) out += ", ";
                    out += format_double(g.cov(i, j));
                }
                out += "]";
            }
            return out + "])";
        }
        case QuandleKind::hamiltonian:
            throw std::invalid_argument("hamiltonian colours have no text literal");
    }
    throw std::logic_error("element_to_string: unreachable");
}

struct TmDocument {
    TangleMachine machine;
    Coloring colors;  // declared partial colouring
};

/**
 * Parses the .tm machine format. Lines, '#' comments allowed:
 *   machine <name>
 *   quandle <kind> <param>
 *   arc <id> [<id> ...]
 *   interaction <id> agent=<arc> in=[a,...] out=[b,...] [weight=<w>] [frame=<i>] [orient=fwd|rev]
 *   inputs <id> ...
 *   outputs <id> ...
 *   color <arc>=<literal>
 */
inline TmDocument parse_tm(const std::string& text, bool enforce_valid = true) {
    TmDocument doc;
    std::vector<std::pair<int, std::string>> color_lines;
    std::istringstream in(text);
    std::string raw;
    int ln = 0;
    bool saw_quandle = false;
    while (std::getline(in, raw)) {
        ++ln;
        const std::size_t hash = raw.find('#');
        std::string line = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const std::size_t sp = line.find_first_of(" \t");
        const std::string head = sp == std::string::npos ? line : line.substr(0, sp);
        const std::string rest = sp == std::string::npos ? "" : detail::trim(line.substr(sp));
        if (head == "machine") {
            if (rest.empty()) throw TmParseError(ln, "machine needs a name");
            doc.machine.name = rest;
        } else if (head == "quandle") {
            try {
                doc.machine.quandle = QuandleInstance::parse(rest);
            } catch (const std::exception& ex) {
                throw TmParseError(ln, ex.what());
            }
            saw_quandle = true;
        } else if (head == "arc") {
            const std::vector<std::string> ids = detail::split_ws(rest);
            if (ids.empty()) throw TmParseError(ln, "arc needs at least one id");
            for (const std::string& id : ids) {
                if (doc.machine.has_arc(id)) throw TmParseError(ln, "duplicate arc '" + id + "'");
                doc.machine.arcs.push_back(id);
            }
        } else if (head == "interaction") {
            const std::vector<std::string> tok = detail::split_ws(rest);
            if (tok.empty()) throw TmParseError(ln, "interaction needs an id");
            Interaction i;
            i.id = tok[0];
            std::vector<std::string> ins, outs;
            bool saw_agent = false;
            for (std::size_t k = 1; k < tok.size(); ++k) {
                const std::size_t eq = tok[k].find('=');
                if (eq == std::string::npos)
                    throw TmParseError(ln, "expected key=value, got '" + tok[k] + "'");
                const std::string key = tok[k].substr(0, eq);
                const std::string val = tok[k].substr(eq + 1);
                if (key == "agent") {
                    i.agent = val;
                    saw_agent = true;
                } else if (key == "in") {
                    ins = detail::split_list(val, ln);
                } else if (key == "out") {
                    outs = detail::split_list(val, ln);
                } else if (key == "weight") {
                    try {
                        i.weight = std::stod(val);
                    } catch (const std::exception&) {
                        throw TmParseError(ln, "bad weight '" + val + "'");
                    }
                } else if (key == "frame") {
                    try {
                        i.frame = std::stoi(val);
                    } catch (const std::exception&) {
                        throw TmParseError(ln, "bad frame '" + val + "'");
                    }
                } else if (key == "orient") {
                    if (val == "fwd")
                        i.reverse = false;
                    else if (val == "rev")
                        i.reverse = true;
                    else
                        throw TmParseError(ln, "orient must be fwd or rev");
                } else {
                    throw TmParseError(ln, "unknown interaction key '" + key + "'");
                }
            }
            if (!saw_agent) throw TmParseError(ln, "interaction '" + i.id + "' needs agent=");
            if (ins.size() != outs.size())
                throw TmParseError(ln, "interaction '" + i.id + "' in/out lists differ in length");
            if (ins.empty())
                throw TmParseError(ln, "interaction '" + i.id + "' needs patient pairs");
            for (std::size_t k = 0; k < ins.size(); ++k) i.pairs.emplace_back(ins[k], outs[k]);
            doc.machine.interactions.push_back(std::move(i));
        } else if (head == "inputs" || head == "outputs") {
            const std::vector<std::string> ids = detail::split_ws(rest);
            auto& dst = head == "inputs" ? doc.machine.inputs : doc.machine.outputs;
            dst.insert(dst.end(), ids.begin(), ids.end());
        } else if (head == "color" || head == "colour") {
            color_lines.emplace_back(ln, rest);
        } else {
            throw TmParseError(ln, "unknown directive '" + head + "'");
        }
    }
    if (!saw_quandle) throw TmParseError(ln, "machine needs a quandle line");
    for (const auto& [cl, body] : color_lines) {
        const std::size_t eq = body.find('=');
        if (eq == std::string::npos) throw TmParseError(cl, "color needs <arc>=<literal>");
        const std::string arc = detail::trim(body.substr(0, eq));
        if (!doc.machine.has_arc(arc)) throw TmParseError(cl, "color for undeclared arc '" + arc + "'");
        try {
            doc.colors[arc] = element_from_string(doc.machine.quandle, body.substr(eq + 1));
        } catch (const std::exception& ex) {
            throw TmParseError(cl, ex.what());
        }
    }
    if (enforce_valid) {
        const ValidationReport rep = validate(doc.machine);
        if (!rep.ok()) throw TmParseError(0, "invalid machine: " + rep.violations.front());
    }
    return doc;
}

inline TmDocument parse_tm_file(const std::string& path, bool enforce_valid = true) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << f.rdbuf();
    return parse_tm(buf.str(), enforce_valid);
}

/// Canonical serialization: sorted arcs, interactions sorted by id.
inline std::string serialize_tm(const TangleMachine& m, const Coloring& colors = {}) {
    std::ostringstream out;
    out << "machine " << m.name << "\n";
    out << "quandle " << m.quandle.spec_string() << "\n";
    std::vector<std::string> arcs = m.arcs;
    std::sort(arcs.begin(), arcs.end());
    for (const std::string& a : arcs) out << "arc " << a << "\n";
    std::vector<Interaction> inter = m.interactions;
    std::sort(inter.begin(), inter.end(),
              [](const Interaction& a, const Interaction& b) { return a.id < b.id; });
    for (const Interaction& i : inter) {
        out << "interaction " << i.id << " agent=" << i.agent << " in=[";
        for (std::size_t k = 0; k < i.pairs.size(); ++k)
            out << (k ? "," : "") << i.pairs[k].first;
        out << "] out=[";
        for (std::size_t k = 0; k < i.pairs.size(); ++k)
            out << (k ? "," : "") << i.pairs[k].second;
        out << "]";
        if (i.weight) out << " weight=" << format_double(*i.weight);
        if (i.frame) out << " frame=" << *i.frame;
        if (i.reverse) out << " orient=rev";
        out << "\n";
    }
    if (!m.inputs.empty()) {
        out << "inputs";
        for (const std::string& a : m.inputs) out << " " << a;
        out << "\n";
    }
    if (!m.outputs.empty()) {
        out << "outputs";
        for (const std::string& a : m.outputs) out << " " << a;
        out << "\n";
    }
    for (const auto& [arc, e] : colors)
        out << "color " << arc << "=" << element_to_string(m.quandle, e) << "\n";
    return out.str();
}

} // namespace tangleforge
