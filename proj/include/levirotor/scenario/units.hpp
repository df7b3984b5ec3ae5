#pragma once

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>

#include "../constants.hpp"
#include "../errors.hpp"

namespace levirotor::scenario {

// Exponents of (kg, m, s, A, K).
struct Dimension {
    std::array<int, 5> e{};

    Dimension operator*(const Dimension& o) const
    {
        Dimension d;
        for (int i = 0; i < 5; ++i) d.e[i] = e[i] + o.e[i];
        return d;
    }
    Dimension pow(int n) const
    {
        Dimension d;
        for (int i = 0; i < 5; ++i) d.e[i] = e[i] * n;
        return d;
    }
    bool operator==(const Dimension& o) const { return e == o.e; }
};

// Physical kind of a config field. Angular frequencies take "Hz" as cycles
// per second (times 2 pi); rates take "Hz" as 1/s.
enum class Quantity {
    dimensionless, length, time, mass, charge, dipole, quadrupole, inertia, voltage, field, angular_frequency, rate,
    resistance, inductance, capacitance, temperature, magnetic_flux, angle, momentum, angular_momentum
};

namespace detail {

inline Dimension dim(int kg, int m, int s, int A, int K) { return Dimension{{kg, m, s, A, K}}; }

inline Dimension dimension_of(Quantity q)
{
    switch (q) {
        case Quantity::dimensionless:
        case Quantity::angle: return dim(0, 0, 0, 0, 0);
        case Quantity::length: return dim(0, 1, 0, 0, 0);
        case Quantity::time: return dim(0, 0, 1, 0, 0);
        case Quantity::mass: return dim(1, 0, 0, 0, 0);
        case Quantity::charge: return dim(0, 0, 1, 1, 0);
        case Quantity::dipole: return dim(0, 1, 1, 1, 0);
        case Quantity::quadrupole: return dim(0, 2, 1, 1, 0);
        case Quantity::inertia: return dim(1, 2, 0, 0, 0);
        case Quantity::voltage: return dim(1, 2, -3, -1, 0);
        case Quantity::field: return dim(1, 1, -3, -1, 0);
        case Quantity::angular_frequency:
        case Quantity::rate: return dim(0, 0, -1, 0, 0);
        case Quantity::resistance: return dim(1, 2, -3, -2, 0);
        case Quantity::inductance: return dim(1, 2, -2, -2, 0);
        case Quantity::capacitance: return dim(-1, -2, 4, 2, 0);
        case Quantity::temperature: return dim(0, 0, 0, 0, 1);
        case Quantity::magnetic_flux: return dim(1, 2, -2, -1, 0);
        case Quantity::momentum: return dim(1, 1, -1, 0, 0);
        case Quantity::angular_momentum: return dim(1, 2, -1, 0, 0);
    }
    return dim(0, 0, 0, 0, 0);
}

struct UnitDef {
    double factor;
    Dimension dim;
    bool prefixable;
};

inline const std::map<std::string, UnitDef>& unit_table()
{
    static const std::map<std::string, UnitDef> table = {
        {"m", {1.0, dim(0, 1, 0, 0, 0), true}},
        {"s", {1.0, dim(0, 0, 1, 0, 0), true}},
        {"g", {1e-3, dim(1, 0, 0, 0, 0), true}},
        {"kg", {1.0, dim(1, 0, 0, 0, 0), false}},
        {"A", {1.0, dim(0, 0, 0, 1, 0), true}},
        {"K", {1.0, dim(0, 0, 0, 0, 1), true}},
        {"C", {1.0, dim(0, 0, 1, 1, 0), true}},
        {"V", {1.0, dim(1, 2, -3, -1, 0), true}},
        {"Ohm", {1.0, dim(1, 2, -3, -2, 0), true}},
        {"ohm", {1.0, dim(1, 2, -3, -2, 0), true}},
        {"H", {1.0, dim(1, 2, -2, -2, 0), true}},
        {"F", {1.0, dim(-1, -2, 4, 2, 0), true}},
        {"Hz", {1.0, dim(0, 0, -1, 0, 0), true}},
        {"Wb", {1.0, dim(1, 2, -2, -1, 0), true}},
        {"J", {1.0, dim(1, 2, -2, 0, 0), true}},
        {"eV", {elementary_charge, dim(1, 2, -2, 0, 0), true}},
        {"amu", {atomic_mass_unit, dim(1, 0, 0, 0, 0), false}},
        {"u", {atomic_mass_unit, dim(1, 0, 0, 0, 0), false}},
        {"e", {elementary_charge, dim(0, 0, 1, 1, 0), false}},
        {"rad", {1.0, dim(0, 0, 0, 0, 0), false}},
        {"deg", {pi / 180.0, dim(0, 0, 0, 0, 0), false}},
        {"1", {1.0, dim(0, 0, 0, 0, 0), false}},
    };
    return table;
}

inline const std::map<std::string, double>& prefixes()
{
    static const std::map<std::string, double> p = {{"f", 1e-15}, {"p", 1e-12}, {"n", 1e-9}, {"u", 1e-6},
                                                     {"\xC2\xB5", 1e-6}, {"m", 1e-3}, {"c", 1e-2}, {"k", 1e3},
                                                     {"M", 1e6}, {"G", 1e9}};
    return p;
}

struct ParsedUnit {
    double factor = 1.0;
    Dimension dim;
    bool has_hz = false;
};

inline UnitDef lookup_symbol(const std::string& sym, bool& is_hz)
{
    const auto& t = unit_table();
    if (auto it = t.find(sym); it != t.end()) {
        is_hz = sym == "Hz";
        return it->second;
    }
    for (const auto& [pre, f] : prefixes()) {
        if (sym.size() > pre.size() && sym.compare(0, pre.size(), pre) == 0) {
            const auto it = t.find(sym.substr(pre.size()));
            if (it != t.end() && it->second.prefixable) {
                is_hz = it->first == "Hz";
                return {f * it->second.factor, it->second.dim, false};
            }
        }
    }
    throw ConfigError("unknown unit '" + sym + "'");
}

// Unit expression: symbols joined by spaces or '*', one optional '/', and
// integer powers with '^' (e.g. "kg m^2", "e nm", "rad/s").
inline ParsedUnit parse_unit(const std::string& text)
{
    ParsedUnit out;
    int sign = 1;
    std::size_t i = 0;
    while (i < text.size()) {
        const char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c)) || c == '*') {
            ++i;
            continue;
        }
        if (c == '/') {
            if (sign < 0) throw ConfigError("more than one '/' in unit '" + text + "'");
            sign = -1;
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) && text[j] != '*'
               && text[j] != '/' && text[j] != '^')
            ++j;
        const std::string sym = text.substr(i, j - i);
        int power = 1;
        if (j < text.size() && text[j] == '^') {
            std::size_t k = j + 1;
            if (k < text.size() && (text[k] == '-' || text[k] == '+')) ++k;
            while (k < text.size() && std::isdigit(static_cast<unsigned char>(text[k]))) ++k;
            try {
                power = std::stoi(text.substr(j + 1, k - j - 1));
            } catch (const std::exception&) {
                throw ConfigError("bad exponent in unit '" + text + "'");
            }
            j = k;
        }
        bool is_hz = false;
        const UnitDef u = lookup_symbol(sym, is_hz);
        out.has_hz = out.has_hz || is_hz;
        out.factor *= std::pow(u.factor, sign * power);
        out.dim = out.dim * u.dim.pow(sign * power);
        i = j;
    }
    return out;
}

}  // namespace detail

inline const char* si_unit(Quantity q)
{
    switch (q) {
        case Quantity::dimensionless: return "";
        case Quantity::angle: return "rad";
        case Quantity::length: return "m";
        case Quantity::time: return "s";
        case Quantity::mass: return "kg";
        case Quantity::charge: return "C";
        case Quantity::dipole: return "C m";
        case Quantity::quadrupole: return "C m^2";
        case Quantity::inertia: return "kg m^2";
        case Quantity::voltage: return "V";
        case Quantity::field: return "V/m";
        case Quantity::angular_frequency: return "rad/s";
        case Quantity::rate: return "1/s";
        case Quantity::resistance: return "Ohm";
        case Quantity::inductance: return "H";
        case Quantity::capacitance: return "F";
        case Quantity::temperature: return "K";
        case Quantity::magnetic_flux: return "Wb";
        case Quantity::momentum: return "kg m/s";
        case Quantity::angular_momentum: return "kg m^2/s";
    }
    return "";
}

// "750 kHz" -> SI value for the requested quantity. A bare number is SI.
inline double parse_quantity(const std::string& text, Quantity q)
{
    std::size_t pos = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &pos);
    } catch (const std::exception&) {
        throw ConfigError("expected a number with optional unit, got '" + text + "'");
    }
    const std::string rest = text.substr(pos);
    if (rest.find_first_not_of(" \t") == std::string::npos) return value;
    const detail::ParsedUnit u = detail::parse_unit(rest);
    if (!(u.dim == detail::dimension_of(q)))
        throw ConfigError("unit '" + rest.substr(rest.find_first_not_of(" \t")) + "' has the wrong dimension"
                          + (q == Quantity::dimensionless ? "" : std::string(" (expected ") + si_unit(q) + ")"));
    double v = value * u.factor;
    if (q == Quantity::angular_frequency && u.has_hz) v *= two_pi;
    return v;
}

// Shortest text that parses back to exactly the same double.
inline std::string format_quantity(double v, Quantity q)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    std::string s = buf;
    const std::string unit = si_unit(q);
    return unit.empty() ? s : s + " " + unit;
}

}  // namespace levirotor::scenario
