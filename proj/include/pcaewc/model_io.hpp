#pragma once

#include "pcaewc/csv.hpp"
#include "pcaewc/pipeline.hpp"
#include "pcaewc/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

namespace pcaewc {

// Model files are JSON with a fixed key order and %.17g floats, written by a
// small emitter so that serialize -> deserialize -> serialize is byte-identical.

namespace detail {

inline std::string escape_json(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        out += c;
    }
    return out;
}

inline void emit_array(std::string& out, const double* data, Index count) {
    out += '[';
    for (Index i = 0; i < count; ++i) {
        if (i) out += ',';
        out += fmt_g17(data[i]);
    }
    out += ']';
}

inline void emit_matrix_row_major(std::string& out, const Matrix& m) {
    out += '[';
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) {
            if (i || j) out += ',';
            out += fmt_g17(m(i, j));
        }
    out += ']';
}

inline Matrix matrix_from_json(const nlohmann::json& arr, Index rows, Index cols,
                               const std::string& key) {
    if (!arr.is_array() || static_cast<Index>(arr.size()) != rows * cols)
        throw ModelFileCorrupt("model field '" + key + "' has wrong size");
    Matrix m(rows, cols);
    Index k = 0;
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) m(i, j) = arr[static_cast<std::size_t>(k++)].get<double>();
    return m;
}

inline Vector vector_from_json(const nlohmann::json& arr, Index size, const std::string& key) {
    if (!arr.is_array() || static_cast<Index>(arr.size()) != size)
        throw ModelFileCorrupt("model field '" + key + "' has wrong size");
    Vector v(size);
    for (Index i = 0; i < size; ++i) v[i] = arr[static_cast<std::size_t>(i)].get<double>();
    return v;
}

}  // namespace detail

inline std::string serialize_model(const ModeModelState& state) {
    const Index m = state.pca.loadings.rows();
    const Index l = state.pca.loadings.cols();
    std::string s;
    s.reserve(1 << 16);
    s += "{\"format\":\"pcaewc-model\",\"version\":1,";
    s += "\"label\":\"" + detail::escape_json(state.label) + "\",";
    s += "\"mode_index\":" + std::to_string(state.mode_index) + ",";
    s += "\"n_vars\":" + std::to_string(m) + ",";
    s += "\"pca\":{\"n_vars\":" + std::to_string(m) +
         ",\"n_components\":" + std::to_string(l) + ",\"loadings\":";
    detail::emit_matrix_row_major(s, state.pca.loadings);
    s += ",\"score_variances\":";
    detail::emit_array(s, state.pca.score_variances.data(), state.pca.score_variances.size());
    s += ",\"n_train\":" + std::to_string(state.pca.n_train) + ",\"scaler\":{\"mean\":";
    detail::emit_array(s, state.scaler.mean.data(), state.scaler.mean.size());
    s += ",\"std\":";
    detail::emit_array(s, state.scaler.std.data(), state.scaler.std.size());
    s += "}},\"ewc\":{\"omega\":";
    detail::emit_matrix_row_major(s, state.ewc.omega);
    s += ",\"anchor\":";
    detail::emit_matrix_row_major(s, state.ewc.anchor);
    s += ",\"lambda_mode\":" + detail::fmt_g17(state.ewc.lambda_mode);
    s += ",\"lambda_prior\":" + detail::fmt_g17(state.ewc.lambda_prior);
    s += ",\"mode_count\":" + std::to_string(state.ewc.mode_count);
    s += "},\"limits\":{\"t2_limit\":" + detail::fmt_g17(state.limits.t2_limit);
    s += ",\"spe_limit\":" + detail::fmt_g17(state.limits.spe_limit);
    s += ",\"alpha\":" + detail::fmt_g17(state.limits.alpha);
    s += "},\"score_cov\":";
    detail::emit_matrix_row_major(s, state.score_cov);
    s += "}";
    return s;
}

inline void write_model(const std::filesystem::path& path, const ModeModelState& state) {
    auto out = detail::open_out(path);
    out << serialize_model(state) << "\n";
    if (!out) throw IoFailure("write failed: " + path.string());
}

inline ModeModelState deserialize_model(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ModelFileCorrupt(std::string("model json parse error: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != "pcaewc-model")
            throw ModelFileCorrupt("not a pcaewc model file");
        const Index m = j.at("n_vars").get<Index>();
        const auto& pj = j.at("pca");
        const Index l = pj.at("n_components").get<Index>();
        if (m < 1 || l < 1 || l > m) throw ModelFileCorrupt("invalid model dimensions");

        ModeModelState state;
        state.label = j.at("label").get<std::string>();
        state.mode_index = j.at("mode_index").get<int>();
        state.pca.loadings = detail::matrix_from_json(pj.at("loadings"), m, l, "pca.loadings");
        state.pca.n_components = l;
        state.pca.score_variances =
            detail::vector_from_json(pj.at("score_variances"), l, "pca.score_variances");
        state.pca.n_train = pj.at("n_train").get<Index>();
        state.scaler.mean = detail::vector_from_json(pj.at("scaler").at("mean"), m, "scaler.mean");
        state.scaler.std = detail::vector_from_json(pj.at("scaler").at("std"), m, "scaler.std");
        const auto& ej = j.at("ewc");
        state.ewc.omega = detail::matrix_from_json(ej.at("omega"), m, m, "ewc.omega");
        state.ewc.anchor = detail::matrix_from_json(ej.at("anchor"), m, l, "ewc.anchor");
        state.ewc.lambda_mode = ej.at("lambda_mode").get<double>();
        state.ewc.lambda_prior = ej.at("lambda_prior").get<double>();
        state.ewc.mode_count = ej.at("mode_count").get<int>();
        const auto& lj = j.at("limits");
        state.limits.t2_limit = lj.at("t2_limit").get<double>();
        state.limits.spe_limit = lj.at("spe_limit").get<double>();
        state.limits.alpha = lj.at("alpha").get<double>();
        state.score_cov = detail::matrix_from_json(j.at("score_cov"), l, l, "score_cov");

        if (!state.pca.loadings.allFinite() || !state.ewc.omega.allFinite())
            throw ModelFileCorrupt("model contains non-finite values");
        return state;
    } catch (const nlohmann::json::exception& e) {
        throw ModelFileCorrupt(std::string("model field error: ") + e.what());
    }
}

inline ModeModelState read_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure("cannot open model file: " + path.string());
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_model(text);
}

}  // namespace pcaewc
