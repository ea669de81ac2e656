#ifndef T1BS_ACQUISITION_HPP
#define T1BS_ACQUISITION_HPP

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "t1bs/csv.hpp"
#include "t1bs/types.hpp"

namespace t1bs {

inline const char* kProtocolHeader = "b_s_per_mm2,gx,gy,gz,ti_ms,te_ms,tr_ms";

inline void validate_measurement(const Measurement& m, std::size_t row)
{
    const std::string where = "protocol row " + std::to_string(row);
    for (double v : {m.b, m.g[0], m.g[1], m.g[2], m.ti, m.te, m.tr})
        if (!std::isfinite(v)) throw ValidationError(where + ": non-finite value");
    if (m.b < 0.0) throw ValidationError(where + ": negative b-value");
    if (m.ti <= 0.0) throw ValidationError(where + ": inversion time must be positive");
    if (m.te <= 0.0) throw ValidationError(where + ": echo time must be positive");
    if (m.tr <= 0.0) throw ValidationError(where + ": repetition time must be positive");
    if (m.b > 0.0 && std::fabs(norm3(m.g) - 1.0) > 1e-6)
        throw ValidationError(where + ": gradient must be unit length when b > 0");
}

/// Index of the b=0 measurement with the highest TI (first on ties).
inline std::size_t compute_reference_index(const std::vector<Measurement>& measurements)
{
    std::size_t best = measurements.size();
    for (std::size_t i = 0; i < measurements.size(); ++i) {
        if (measurements[i].b != 0.0) continue;
        if (best == measurements.size() || measurements[i].ti > measurements[best].ti) best = i;
    }
    if (best == measurements.size())
        throw ValidationError("protocol has no b=0 measurement to normalize against");
    return best;
}

inline AcquisitionProtocol make_protocol(std::vector<Measurement> measurements)
{
    if (measurements.empty()) throw ValidationError("protocol is empty");
    for (std::size_t i = 0; i < measurements.size(); ++i) validate_measurement(measurements[i], i);
    AcquisitionProtocol p;
    p.reference_index = compute_reference_index(measurements);
    p.measurements = std::move(measurements);
    return p;
}

namespace detail {

// File columns carry values scaled by 1000 (ms, s/mm^2). x*1000 is exact in
// 80-bit extended precision (53 + 7 mantissa bits), so printing the long
// double product and dividing again in long double on load reproduces the
// original double bit for bit; a plain double round trip cannot (some doubles
// have no preimage under /1000).
inline std::string format_scaled_1000(double canonical)
{
    const long double v = static_cast<long double>(canonical) * 1000.0L;
    char buf[64];
    for (int prec = 1; prec <= 21; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*Lg", prec, v);
        if (std::strtold(buf, nullptr) == v) return buf;
    }
    std::snprintf(buf, sizeof(buf), "%.21Lg", v);
    return buf;
}

inline double parse_scaled_1000(const std::string& s, const std::string& context)
{
    const std::string t = trim(s);
    if (t.empty()) throw ValidationError(context + ": empty numeric field");
    char* end = nullptr;
    const long double v = std::strtold(t.c_str(), &end);
    if (end != t.c_str() + t.size())
        throw ValidationError(context + ": cannot parse number '" + t + "'");
    return static_cast<double>(v / 1000.0L);
}

}  // namespace detail

inline AcquisitionProtocol load_protocol(const std::string& path)
{
    const std::vector<std::string> lines = read_lines(path);
    if (lines.empty()) throw ValidationError(path + ": empty protocol file");
    const auto header = split_fields(lines[0]);
    const auto expected = split_fields(kProtocolHeader);
    if (header != expected)
        throw ValidationError(path + ": protocol header must be exactly `" +
                              std::string(kProtocolHeader) + "`");
    std::vector<Measurement> measurements;
    measurements.reserve(lines.size() - 1);
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto fields = split_fields(lines[li]);
        const std::string where = path + " row " + std::to_string(li - 1);
        if (fields.size() != 7)
            throw ValidationError(where + ": expected 7 columns, found " +
                                  std::to_string(fields.size()));
        Measurement m;
        m.b = detail::parse_scaled_1000(fields[0], where);  // s/mm² -> ms/µm²
        m.g = {parse_double(fields[1], where), parse_double(fields[2], where),
               parse_double(fields[3], where)};
        m.ti = detail::parse_scaled_1000(fields[4], where);  // ms -> s
        m.te = detail::parse_scaled_1000(fields[5], where);
        m.tr = detail::parse_scaled_1000(fields[6], where);
        measurements.push_back(m);
    }
    try {
        return make_protocol(std::move(measurements));
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

inline void write_protocol(const AcquisitionProtocol& p, const std::string& path)
{
    std::ostringstream out;
    out << kProtocolHeader << '\n';
    for (const Measurement& m : p.measurements) {
        out << detail::format_scaled_1000(m.b) << ',' << format_double(m.g[0]) << ','
            << format_double(m.g[1]) << ',' << format_double(m.g[2]) << ','
            << detail::format_scaled_1000(m.ti) << ',' << detail::format_scaled_1000(m.te) << ','
            << detail::format_scaled_1000(m.tr) << '\n';
    }
    write_text_file(path, out.str());
}

/// Keeps only measurements with te == te_keep and ti in [ti_min, ti_max];
/// drops the same columns from the signals. All times in seconds.
inline std::pair<AcquisitionProtocol, SignalMatrix> filter_measurements(
    const AcquisitionProtocol& protocol, const SignalMatrix& signals, double te_keep,
    double ti_min, double ti_max)
{
    if (signals.n_meas != protocol.size())
        throw ValidationError("signals and protocol measurement counts differ");
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < protocol.size(); ++i) {
        const Measurement& m = protocol.measurements[i];
        if (m.te == te_keep && m.ti >= ti_min && m.ti <= ti_max) keep.push_back(i);
    }
    if (keep.empty()) throw ValidationError("measurement filter removed every measurement");

    std::vector<Measurement> kept;
    kept.reserve(keep.size());
    for (std::size_t i : keep) kept.push_back(protocol.measurements[i]);
    AcquisitionProtocol fp = make_protocol(std::move(kept));  // rechecks b=0 presence

    SignalMatrix fs;
    fs.n_voxels = signals.n_voxels;
    fs.n_meas = keep.size();
    fs.normalized = signals.normalized;
    fs.values.resize(static_cast<Eigen::Index>(signals.n_voxels),
                     static_cast<Eigen::Index>(keep.size()));
    for (std::size_t v = 0; v < signals.n_voxels; ++v)
        for (std::size_t j = 0; j < keep.size(); ++j)
            fs.values(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(j)) =
                signals.values(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(keep[j]));
    return {std::move(fp), std::move(fs)};
}

/// Divides each voxel row by its reference-measurement entry. Voxels whose
/// reference value is <= 0 or non-finite are excluded and their indices
/// appended to `dropped` when given; with `dropped == nullptr` such voxels
/// raise a ValidationError listing every offender.
inline SignalMatrix normalize_signals(const AcquisitionProtocol& protocol,
                                      const SignalMatrix& signals,
                                      std::vector<std::size_t>* dropped = nullptr)
{
    if (signals.normalized)
        throw ValidationError("signals are already normalized; refusing to normalize twice");
    if (signals.n_meas != protocol.size())
        throw ValidationError("signals and protocol measurement counts differ");
    const auto ref = static_cast<Eigen::Index>(protocol.reference_index);

    std::vector<std::size_t> bad;
    for (std::size_t v = 0; v < signals.n_voxels; ++v) {
        const double r = signals.values(static_cast<Eigen::Index>(v), ref);
        if (!(r > 0.0) || !std::isfinite(r)) bad.push_back(v);
    }
    if (!bad.empty() && dropped == nullptr) {
        std::ostringstream msg;
        msg << "cannot normalize: non-positive reference signal in voxel(s)";
        for (std::size_t v : bad) msg << ' ' << v;
        throw ValidationError(msg.str());
    }

    SignalMatrix out;
    out.n_meas = signals.n_meas;
    out.normalized = true;
    out.n_voxels = signals.n_voxels - bad.size();
    out.values.resize(static_cast<Eigen::Index>(out.n_voxels),
                      static_cast<Eigen::Index>(out.n_meas));
    std::size_t next_bad = 0;
    Eigen::Index row_out = 0;
    for (std::size_t v = 0; v < signals.n_voxels; ++v) {
        if (next_bad < bad.size() && bad[next_bad] == v) {
            ++next_bad;
            if (dropped) dropped->push_back(v);
            continue;
        }
        const double r = signals.values(static_cast<Eigen::Index>(v), ref);
        out.values.row(row_out) = signals.values.row(static_cast<Eigen::Index>(v)) / r;
        ++row_out;
    }
    return out;
}

struct VolumeMask {
    std::size_t nx = 0, ny = 0, nz = 0;
    std::vector<std::size_t> indices;  // linear index = x + nx*(y + ny*z)

    std::size_t volume() const { return nx * ny * nz; }
};

inline VolumeMask load_mask(const std::string& path);  // defined below, needs JSON

inline void validate_signal_values(const SignalMatrix& sm, const std::string& path)
{
    for (std::size_t v = 0; v < sm.n_voxels; ++v)
        for (std::size_t m = 0; m < sm.n_meas; ++m) {
            const double x =
                sm.values(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(m));
            if (!std::isfinite(x))
                throw ValidationError(path + ": non-finite signal at voxel " + std::to_string(v) +
                                      ", measurement " + std::to_string(m));
            if (x < 0.0)
                throw ValidationError(path + ": negative signal at voxel " + std::to_string(v) +
                                      ", measurement " + std::to_string(m));
        }
}

inline SignalMatrix apply_mask_rows(const SignalMatrix& sm, const VolumeMask& mask,
                                    const std::string& path)
{
    if (sm.n_voxels == mask.indices.size()) return sm;  // already masked, positional pairing
    if (sm.n_voxels != mask.volume())
        throw ValidationError(path + ": signal rows (" + std::to_string(sm.n_voxels) +
                              ") match neither mask size (" + std::to_string(mask.indices.size()) +
                              ") nor volume " + std::to_string(mask.volume()));
    SignalMatrix out;
    out.n_meas = sm.n_meas;
    out.normalized = sm.normalized;
    out.n_voxels = mask.indices.size();
    out.values.resize(static_cast<Eigen::Index>(out.n_voxels),
                      static_cast<Eigen::Index>(out.n_meas));
    for (std::size_t i = 0; i < mask.indices.size(); ++i) {
        if (mask.indices[i] >= sm.n_voxels)
            throw ValidationError(path + ": mask index " + std::to_string(mask.indices[i]) +
                                  " out of range");
        out.values.row(static_cast<Eigen::Index>(i)) =
            sm.values.row(static_cast<Eigen::Index>(mask.indices[i]));
    }
    return out;
}

inline bool ends_with(const std::string& s, const std::string& suffix)
{
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

inline SignalMatrix load_signals_csv(const std::string& path)
{
    const auto lines = read_lines(path);
    if (lines.empty()) throw ValidationError(path + ": empty signal file");
    SignalMatrix sm;
    sm.n_voxels = lines.size();
    sm.n_meas = split_fields(lines[0]).size();
    sm.values.resize(static_cast<Eigen::Index>(sm.n_voxels), static_cast<Eigen::Index>(sm.n_meas));
    for (std::size_t v = 0; v < lines.size(); ++v) {
        const auto fields = split_fields(lines[v]);
        const std::string where = path + " row " + std::to_string(v);
        if (fields.size() != sm.n_meas)
            throw ValidationError(where + ": expected " + std::to_string(sm.n_meas) +
                                  " columns, found " + std::to_string(fields.size()));
        for (std::size_t m = 0; m < sm.n_meas; ++m)
            sm.values(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(m)) =
                parse_double(fields[m], where);
    }
    return sm;
}

inline SignalMatrix load_signals_f32(const std::string& path);  // needs JSON, defined below

inline SignalMatrix load_signals(const std::string& path, const VolumeMask* mask = nullptr)
{
    SignalMatrix sm = ends_with(path, ".f32") ? load_signals_f32(path) : load_signals_csv(path);
    if (mask) sm = apply_mask_rows(sm, *mask, path);
    validate_signal_values(sm, path);
    return sm;
}

inline void save_signals_csv(const SignalMatrix& sm, const std::string& path)
{
    std::ostringstream out;
    for (std::size_t v = 0; v < sm.n_voxels; ++v) {
        for (std::size_t m = 0; m < sm.n_meas; ++m) {
            if (m) out << ',';
            out << format_double(
                sm.values(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(m)));
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

inline void save_signals_f32(const SignalMatrix& sm, const std::string& path);  // defined below

}  // namespace t1bs

#include <json.hpp>

namespace t1bs {

inline SignalMatrix load_signals_f32(const std::string& path)
{
    const std::string sidecar_path = swap_extension(path, "json");
    nlohmann::json sidecar;
    try {
        sidecar = nlohmann::json::parse(read_text_file(sidecar_path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(sidecar_path + ": invalid JSON sidecar: " + e.what());
    }
    if (!sidecar.contains("n_voxels") || !sidecar.contains("n_meas"))
        throw ValidationError(sidecar_path + ": sidecar must contain n_voxels and n_meas");
    const auto n_voxels = sidecar["n_voxels"].get<std::size_t>();
    const auto n_meas = sidecar["n_meas"].get<std::size_t>();
    const std::vector<float> raw = read_binary_file<float>(path);
    if (raw.size() != n_voxels * n_meas)
        throw ValidationError(path + ": holds " + std::to_string(raw.size()) +
                              " floats but sidecar says " + std::to_string(n_voxels) + "x" +
                              std::to_string(n_meas));
    SignalMatrix sm;
    sm.n_voxels = n_voxels;
    sm.n_meas = n_meas;
    sm.normalized = sidecar.value("normalized", false);
    sm.values.resize(static_cast<Eigen::Index>(n_voxels), static_cast<Eigen::Index>(n_meas));
    for (std::size_t i = 0; i < raw.size(); ++i)
        sm.values(static_cast<Eigen::Index>(i / n_meas), static_cast<Eigen::Index>(i % n_meas)) =
            static_cast<double>(raw[i]);
    return sm;
}

inline void save_signals_f32(const SignalMatrix& sm, const std::string& path)
{
    std::vector<float> raw(sm.n_voxels * sm.n_meas);
    for (std::size_t v = 0; v < sm.n_voxels; ++v)
        for (std::size_t m = 0; m < sm.n_meas; ++m)
            raw[v * sm.n_meas + m] = static_cast<float>(
                sm.values(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(m)));
    write_binary_file(path, raw);
    nlohmann::json sidecar;
    sidecar["n_voxels"] = sm.n_voxels;
    sidecar["n_meas"] = sm.n_meas;
    sidecar["normalized"] = sm.normalized;
    write_text_file(swap_extension(path, "json"), sidecar.dump(2) + "\n");
}

inline VolumeMask load_mask(const std::string& path)
{
    const auto lines = read_lines(path);
    if (lines.empty() || trim(lines[0]) != "index")
        throw ValidationError(path + ": mask CSV must start with header `index`");
    VolumeMask mask;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const long long v = parse_int(lines[li], path + " row " + std::to_string(li - 1));
        if (v < 0) throw ValidationError(path + ": negative mask index");
        mask.indices.push_back(static_cast<std::size_t>(v));
    }
    const std::string sidecar_path = swap_extension(path, "json");
    nlohmann::json sidecar;
    try {
        sidecar = nlohmann::json::parse(read_text_file(sidecar_path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(sidecar_path + ": invalid JSON sidecar: " + e.what());
    }
    for (const char* key : {"nx", "ny", "nz"})
        if (!sidecar.contains(key))
            throw ValidationError(sidecar_path + ": sidecar must contain nx, ny, nz");
    mask.nx = sidecar["nx"].get<std::size_t>();
    mask.ny = sidecar["ny"].get<std::size_t>();
    mask.nz = sidecar["nz"].get<std::size_t>();
    if (mask.volume() == 0) throw ValidationError(sidecar_path + ": zero volume dimensions");
    for (std::size_t idx : mask.indices)
        if (idx >= mask.volume())
            throw ValidationError(path + ": mask index " + std::to_string(idx) +
                                  " outside volume of " + std::to_string(mask.volume()));
    return mask;
}

inline void save_mask(const VolumeMask& mask, const std::string& path)
{
    for (std::size_t idx : mask.indices)
        if (idx >= mask.volume())
            throw ValidationError("mask index " + std::to_string(idx) +
                                  " outside volume of " + std::to_string(mask.volume()));
    std::ostringstream out;
    out << "index\n";
    for (std::size_t idx : mask.indices) out << idx << '\n';
    write_text_file(path, out.str());
    nlohmann::json sidecar;
    sidecar["nx"] = mask.nx;
    sidecar["ny"] = mask.ny;
    sidecar["nz"] = mask.nz;
    write_text_file(swap_extension(path, "json"), sidecar.dump(2) + "\n");
}

}  // namespace t1bs

#endif  // T1BS_ACQUISITION_HPP
