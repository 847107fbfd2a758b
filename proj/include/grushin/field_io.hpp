#pragma once

#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "error.hpp"
#include "spectral_field.hpp"

namespace grushin {

namespace detail {

inline std::string hexfloat(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", v);
    return buf;
}

inline double parse_double(const std::string& tok, int line)
{
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw InvalidInput("field file line " + std::to_string(line) + ": bad number '" + tok + "'");
    return v;
}

inline std::string next_line(std::istream& in, int& line)
{
    std::string s;
    if (!std::getline(in, s)) throw InvalidInput("field file: unexpected end of input after line " + std::to_string(line));
    ++line;
    return s;
}

} // namespace detail

/// Text table: a geometry header, then one record per nonzero coefficient
/// "m k k_1 .. k_d2 re im" with hexadecimal floats (bit-exact).
inline void write_field(std::ostream& out, const SpectralField& u)
{
    const FieldSpace& sp = u.space();
    const Geometry& g = sp.geometry();
    out << "grushin-field 1\n";
    out << "geometry " << g.d1 << ' ' << g.d2 << ' ' << to_string(g.ycase) << ' ' << detail::hexfloat(g.L) << ' '
        << g.K_max << ' ' << g.x.nodes << ' ' << detail::hexfloat(g.x.scale) << ' ' << detail::hexfloat(g.x.max_defect)
        << ' ' << (g.x.resolve_zero_fiber ? 1 : 0) << ' ' << g.y_points << '\n';
    out << "basis " << sp.m_max() << ' ' << sp.basis().quad_order() << '\n';
    out << "label " << u.label << '\n';
    out << "seed " << u.seed << '\n';
    out << "records " << u.nonzero_count() << '\n';
    const HermiteBasis& b = sp.basis();
    for (std::size_t p = 0; p < sp.lattice_size(); ++p) {
        for (std::size_t q = 0; q < sp.slot_count(); ++q) {
            const cd v = u(p, q);
            if (v == cd(0)) continue;
            const int m = b.slot_mode(q);
            out << m << ' ' << (q - b.slot_begin(m));
            for (int k : g.lattice_point(p)) out << ' ' << k;
            out << ' ' << detail::hexfloat(v.real()) << ' ' << detail::hexfloat(v.imag()) << '\n';
        }
    }
}

/// Reads records into an existing space; the header must describe it.
inline SpectralField read_field(std::istream& in, std::shared_ptr<const FieldSpace> space = nullptr)
{
    int line = 0;
    std::string s = detail::next_line(in, line);
    if (s != "grushin-field 1") throw InvalidInput("field file line 1: not a grushin field (header '" + s + "')");
    std::istringstream gs(detail::next_line(in, line));
    std::string tag, ycase, Ls, xscale, xdef;
    Geometry g;
    int zf = 1;
    gs >> tag >> g.d1 >> g.d2 >> ycase >> Ls >> g.K_max >> g.x.nodes >> xscale >> xdef >> zf >> g.y_points;
    if (!gs || tag != "geometry") throw InvalidInput("field file line 2: malformed geometry header");
    g.ycase = ycase == "torus" ? YCase::torus : YCase::euclidean_box;
    g.L = detail::parse_double(Ls, line);
    g.x.scale = detail::parse_double(xscale, line);
    g.x.max_defect = detail::parse_double(xdef, line);
    g.x.resolve_zero_fiber = zf != 0;
    std::istringstream bs(detail::next_line(in, line));
    int m_max = 0, quad = 0;
    bs >> tag >> m_max >> quad;
    if (!bs || tag != "basis") throw InvalidInput("field file line 3: malformed basis header");
    if (space) {
        if (!(space->geometry() == g) || space->m_max() != m_max)
            throw InvalidInput("field file: header does not match the supplied geometry");
    } else {
        space = FieldSpace::make(g, m_max, quad);
    }
    SpectralField u(space);
    s = detail::next_line(in, line);
    if (s.rfind("label ", 0) != 0) throw InvalidInput("field file line 4: missing label");
    u.label = s.substr(6);
    std::istringstream ss(detail::next_line(in, line));
    ss >> tag >> u.seed;
    if (!ss || tag != "seed") throw InvalidInput("field file line 5: missing seed");
    std::istringstream rs(detail::next_line(in, line));
    std::size_t n = 0;
    rs >> tag >> n;
    if (!rs || tag != "records") throw InvalidInput("field file line 6: missing record count");
    const HermiteBasis& b = space->basis();
    for (std::size_t r = 0; r < n; ++r) {
        std::istringstream ls(detail::next_line(in, line));
        int m = 0;
        std::size_t k = 0;
        ls >> m >> k;
        std::vector<int> kk(static_cast<std::size_t>(g.d2));
        for (int& v : kk) ls >> v;
        std::string re, im;
        ls >> re >> im;
        if (!ls) throw InvalidInput("field file line " + std::to_string(line) + ": malformed record");
        if (m < 0 || m > m_max || k >= b.multiplicity(m))
            throw InvalidInput("field file line " + std::to_string(line) + ": mode index out of range");
        if (!g.in_lattice(kk)) throw InvalidInput("field file line " + std::to_string(line) + ": lattice point outside cutoff");
        u.at(g.lattice_index(kk), b.slot(m, k)) = cd(detail::parse_double(re, line), detail::parse_double(im, line));
    }
    return u;
}

} // namespace grushin
