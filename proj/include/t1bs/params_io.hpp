#ifndef T1BS_PARAMS_IO_HPP
#define T1BS_PARAMS_IO_HPP

#include <sstream>
#include <string>
#include <vector>

#include "t1bs/csv.hpp"
#include "t1bs/types.hpp"

namespace t1bs {

/// Parameter table as stored in truth.csv / params_*.csv. truth.csv has the
/// 7 parameter columns only; fit outputs prepend a voxel column and may
/// append a cost column.
struct ParamTable {
    std::vector<std::size_t> voxel;  // empty when the file has no voxel column
    std::vector<TissueParams> params;
    std::vector<double> cost;  // empty when the file has no cost column
};

inline void save_truth_csv(const std::vector<TissueParams>& truth, const std::string& path)
{
    std::ostringstream out;
    for (int p = 0; p < kNumParams; ++p) out << (p ? "," : "") << kParamNames[p];
    out << '\n';
    for (const TissueParams& t : truth) {
        const auto a = t.as_array();
        for (int p = 0; p < kNumParams; ++p) out << (p ? "," : "") << format_double(a[p]);
        out << '\n';
    }
    write_text_file(path, out.str());
}

inline void save_params_csv(const std::vector<TissueParams>& params,
                            const std::vector<double>* cost, const std::string& path)
{
    if (cost && cost->size() != params.size())
        throw ValidationError("cost column length does not match parameter rows");
    std::ostringstream out;
    out << "voxel";
    for (int p = 0; p < kNumParams; ++p) out << ',' << kParamNames[p];
    if (cost) out << ",cost";
    out << '\n';
    for (std::size_t v = 0; v < params.size(); ++v) {
        out << v;
        const auto a = params[v].as_array();
        for (int p = 0; p < kNumParams; ++p) out << ',' << format_double(a[p]);
        if (cost) out << ',' << format_double((*cost)[v]);
        out << '\n';
    }
    write_text_file(path, out.str());
}

inline ParamTable load_params_csv(const std::string& path)
{
    const auto lines = read_lines(path);
    if (lines.empty()) throw ValidationError(path + ": empty parameter file");
    const auto header = split_fields(lines[0]);

    std::vector<std::string> expected_plain, expected_voxel, expected_cost;
    for (int p = 0; p < kNumParams; ++p) expected_plain.push_back(kParamNames[p]);
    expected_voxel.push_back("voxel");
    expected_voxel.insert(expected_voxel.end(), expected_plain.begin(), expected_plain.end());
    expected_cost = expected_voxel;
    expected_cost.push_back("cost");

    bool has_voxel = false, has_cost = false;
    if (header == expected_plain) {
    } else if (header == expected_voxel) {
        has_voxel = true;
    } else if (header == expected_cost) {
        has_voxel = has_cost = true;
    } else {
        throw ValidationError(path + ": unrecognized parameter CSV header");
    }

    ParamTable t;
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto fields = split_fields(lines[li]);
        const std::string where = path + " row " + std::to_string(li - 1);
        const std::size_t want =
            kNumParams + (has_voxel ? 1u : 0u) + (has_cost ? 1u : 0u);
        if (fields.size() != want)
            throw ValidationError(where + ": expected " + std::to_string(want) +
                                  " columns, found " + std::to_string(fields.size()));
        std::size_t c = 0;
        if (has_voxel) {
            const long long v = parse_int(fields[c++], where);
            if (v < 0) throw ValidationError(where + ": negative voxel index");
            t.voxel.push_back(static_cast<std::size_t>(v));
        }
        std::array<double, kNumParams> a{};
        for (int p = 0; p < kNumParams; ++p) a[p] = parse_double(fields[c++], where);
        t.params.push_back(TissueParams::from_array(a));
        if (has_cost) t.cost.push_back(parse_double(fields[c++], where));
    }
    if (t.params.empty()) throw ValidationError(path + ": no parameter rows");
    return t;
}

}  // namespace t1bs

#endif  // T1BS_PARAMS_IO_HPP
