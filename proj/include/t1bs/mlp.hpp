#ifndef T1BS_MLP_HPP
#define T1BS_MLP_HPP

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "t1bs/csv.hpp"
#include "t1bs/rng.hpp"
#include "t1bs/signal_model.hpp"
#include "t1bs/types.hpp"

namespace t1bs {

/// Four dense layers stored input x output: three hidden blocks of width
/// `hidden` and a 7-wide linear head. Hidden width defaults to the
/// measurement count.
struct MlpWeights {
    std::vector<RowMatrixXd> W;
    std::vector<Eigen::VectorXd> b;

    std::size_t n_layers() const { return W.size(); }
    std::size_t n_in() const { return W.empty() ? 0 : static_cast<std::size_t>(W[0].rows()); }
    std::size_t n_out() const { return W.empty() ? 0 : static_cast<std::size_t>(W.back().cols()); }

    bool all_finite() const
    {
        for (const auto& m : W)
            if (!m.allFinite()) return false;
        for (const auto& v : b)
            if (!v.allFinite()) return false;
        return true;
    }

    void validate() const
    {
        if (W.size() != 4 || b.size() != 4) throw ValidationError("network must have 4 layers");
        for (std::size_t l = 0; l < W.size(); ++l) {
            if (b[l].size() != W[l].cols())
                throw ValidationError("bias length mismatch in layer " + std::to_string(l));
            if (l > 0 && W[l].rows() != W[l - 1].cols())
                throw ValidationError("layer shape chain broken at layer " + std::to_string(l));
        }
        if (n_out() != kNumParams) throw ValidationError("output layer must have 7 units");
        if (!all_finite()) throw ValidationError("network weights must be finite");
    }
};

/// Glorot-uniform weights (limit sqrt(6/(fan_in+fan_out))), zero biases.
/// hidden = 0 means hidden width = n_meas.
inline MlpWeights init_weights(std::size_t n_meas, std::uint64_t seed, std::size_t hidden = 0)
{
    if (n_meas == 0) throw ValidationError("n_meas must be positive");
    if (hidden == 0) hidden = n_meas;
    const std::size_t dims[5] = {n_meas, hidden, hidden, hidden, kNumParams};

    MlpWeights w;
    Rng rng(seed, 0);
    for (int l = 0; l < 4; ++l) {
        const auto in = static_cast<Eigen::Index>(dims[l]);
        const auto out = static_cast<Eigen::Index>(dims[l + 1]);
        RowMatrixXd m(in, out);
        const double limit = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
        for (Eigen::Index r = 0; r < in; ++r)
            for (Eigen::Index c = 0; c < out; ++c) m(r, c) = rng.uniform(-limit, limit);
        w.W.push_back(std::move(m));
        w.b.push_back(Eigen::VectorXd::Zero(out));
    }
    return w;
}

inline double elu(double z) { return z > 0.0 ? z : std::expm1(z); }
inline double elu_deriv(double z) { return z > 0.0 ? 1.0 : std::exp(z); }

/// Inverted-scaling dropout masks, one per hidden layer, entries in
/// {0, 1/(1-rate)}. Drawn row-major per layer in layer order.
struct DropoutMasks {
    std::vector<RowMatrixXd> layer;
};

inline DropoutMasks make_dropout_masks(std::size_t n_rows, const MlpWeights& w, double rate,
                                       Rng& rng)
{
    if (!(rate >= 0.0 && rate < 1.0)) throw ValidationError("dropout rate must be in [0, 1)");
    const double keep_scale = 1.0 / (1.0 - rate);
    DropoutMasks masks;
    for (std::size_t l = 0; l + 1 < w.n_layers(); ++l) {
        RowMatrixXd m(static_cast<Eigen::Index>(n_rows), w.W[l].cols());
        for (Eigen::Index r = 0; r < m.rows(); ++r)
            for (Eigen::Index c = 0; c < m.cols(); ++c)
                m(r, c) = rng.uniform01() < rate ? 0.0 : keep_scale;
        masks.layer.push_back(std::move(m));
    }
    return masks;
}

/// Raw 7-vector for one input. Evaluates the sample alone, so the result is
/// independent of any batch it might sit in. mask_row selects the sample's
/// row in each mask.
inline Eigen::VectorXd mlp_forward_sample(const MlpWeights& w, const Eigen::VectorXd& x,
                                          const DropoutMasks* masks = nullptr,
                                          std::size_t mask_row = 0)
{
    Eigen::VectorXd a = x;
    for (std::size_t l = 0; l + 1 < w.n_layers(); ++l) {
        Eigen::VectorXd z = w.W[l].transpose() * a + w.b[l];
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = elu(z[i]);
        if (masks)
            z.array() *= masks->layer[l].row(static_cast<Eigen::Index>(mask_row)).transpose().array();
        a = std::move(z);
    }
    return w.W.back().transpose() * a + w.b.back();
}

struct ForwardResult {
    RowMatrixXd raw;                  // n_rows x 7, pre-clamp network outputs
    std::vector<TissueParams> params; // clamped to bounds
};

/// Public forward pass: sample-by-sample, so single-voxel and batched calls
/// agree exactly.
inline ForwardResult mlp_forward(const MlpWeights& w, const RowMatrixXd& batch,
                                 const DropoutMasks* masks, const ParamBounds& bounds)
{
    if (batch.cols() != static_cast<Eigen::Index>(w.n_in()))
        throw ValidationError("batch width does not match network input width");
    if (!batch.allFinite()) throw ValidationError("batch contains non-finite values");
    ForwardResult out;
    out.raw.resize(batch.rows(), kNumParams);
    out.params.resize(static_cast<std::size_t>(batch.rows()));
    for (Eigen::Index s = 0; s < batch.rows(); ++s) {
        const Eigen::VectorXd x = batch.row(s).transpose();
        const Eigen::VectorXd raw = mlp_forward_sample(w, x, masks, static_cast<std::size_t>(s));
        out.raw.row(s) = raw.transpose();
        std::array<double, kNumParams> a{};
        for (int j = 0; j < kNumParams; ++j) a[j] = raw[j];
        out.params[static_cast<std::size_t>(s)] =
            clamp_params(TissueParams::from_array(a), bounds);
    }
    return out;
}

inline void save_weights(const MlpWeights& w, const std::string& path)
{
    std::vector<double> flat;
    nlohmann::json manifest;
    manifest["dtype"] = "f64le";
    manifest["tensors"] = nlohmann::json::array();
    for (std::size_t l = 0; l < w.n_layers(); ++l) {
        manifest["tensors"].push_back({{"name", "W" + std::to_string(l)},
                                       {"rows", w.W[l].rows()},
                                       {"cols", w.W[l].cols()}});
        for (Eigen::Index r = 0; r < w.W[l].rows(); ++r)
            for (Eigen::Index c = 0; c < w.W[l].cols(); ++c) flat.push_back(w.W[l](r, c));
        manifest["tensors"].push_back(
            {{"name", "b" + std::to_string(l)}, {"rows", w.b[l].size()}, {"cols", 1}});
        for (Eigen::Index i = 0; i < w.b[l].size(); ++i) flat.push_back(w.b[l][i]);
    }
    write_binary_file(path, flat);
    write_text_file(swap_extension(path, "json"), manifest.dump(2) + "\n");
}

inline MlpWeights load_weights(const std::string& path)
{
    nlohmann::json manifest;
    const std::string manifest_path = swap_extension(path, "json");
    try {
        manifest = nlohmann::json::parse(read_text_file(manifest_path));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(manifest_path + ": invalid JSON manifest: " + e.what());
    }
    if (manifest.value("dtype", "") != "f64le")
        throw ValidationError(manifest_path + ": unsupported dtype");
    const std::vector<double> flat = read_binary_file<double>(path);

    MlpWeights w;
    std::size_t offset = 0;
    for (const auto& t : manifest["tensors"]) {
        const auto rows = t["rows"].get<Eigen::Index>();
        const auto cols = t["cols"].get<Eigen::Index>();
        const auto count = static_cast<std::size_t>(rows * cols);
        if (offset + count > flat.size())
            throw ValidationError(path + ": fewer values than the manifest declares");
        const std::string name = t["name"].get<std::string>();
        if (!name.empty() && name[0] == 'W') {
            RowMatrixXd m(rows, cols);
            for (Eigen::Index r = 0; r < rows; ++r)
                for (Eigen::Index c = 0; c < cols; ++c)
                    m(r, c) = flat[offset + static_cast<std::size_t>(r * cols + c)];
            w.W.push_back(std::move(m));
        } else {
            Eigen::VectorXd v(rows);
            for (Eigen::Index i = 0; i < rows; ++i) v[i] = flat[offset + static_cast<std::size_t>(i)];
            w.b.push_back(std::move(v));
        }
        offset += count;
    }
    if (offset != flat.size()) throw ValidationError(path + ": trailing bytes after last tensor");
    w.validate();
    return w;
}

}  // namespace t1bs

#endif  // T1BS_MLP_HPP
