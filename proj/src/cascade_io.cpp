#include "gazekit/cascade_io.hpp"

#include <fstream>

#include <json.hpp>

namespace gazekit {

namespace {

using nlohmann::ordered_json;

constexpr int kFormatVersion = 1;

std::string mask_to_hex(const LbpMask& mask) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(64);
    for (int byte = 0; byte < 32; ++byte) {
        const uint8_t b = static_cast<uint8_t>(mask.words[byte / 8] >> (8 * (byte % 8)));
        out.push_back(digits[b >> 4]);
        out.push_back(digits[b & 0xf]);
    }
    return out;
}

LbpMask mask_from_hex(const std::string& hex, const std::string& where) {
    require(hex.size() == 64, Err::validation,
            where + ": lbp mask must be 64 hex characters, got " + std::to_string(hex.size()));
    LbpMask mask;
    for (int byte = 0; byte < 32; ++byte) {
        uint8_t v = 0;
        for (int k = 0; k < 2; ++k) {
            const char c = hex[static_cast<size_t>(byte) * 2 + k];
            uint8_t nib;
            if (c >= '0' && c <= '9') nib = static_cast<uint8_t>(c - '0');
            else if (c >= 'a' && c <= 'f') nib = static_cast<uint8_t>(c - 'a' + 10);
            else if (c >= 'A' && c <= 'F') nib = static_cast<uint8_t>(c - 'A' + 10);
            else fail(Err::validation, where + ": invalid hex character in lbp mask");
            v = static_cast<uint8_t>((v << 4) | nib);
        }
        mask.words[byte / 8] |= static_cast<uint64_t>(v) << (8 * (byte % 8));
    }
    return mask;
}

ordered_json rect_to_json(const Rect& r) { return ordered_json{r.x, r.y, r.w, r.h}; }

Rect rect_from_json(const ordered_json& j, const std::string& where) {
    require(j.is_array() && j.size() == 4, Err::validation, where + ": rect must be [x,y,w,h]");
    return Rect{j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

}  // namespace

std::string cascade_to_json(const CascadeModel& model) {
    model.validate();
    ordered_json j;
    j["format_version"] = kFormatVersion;
    j["feature_kind"] = model.kind == FeatureKind::haar ? "haar" : "lbp";
    j["base_window"] = ordered_json{model.base_w, model.base_h};
    j["stages"] = ordered_json::array();
    for (const Stage& st : model.stages) {
        ordered_json js;
        js["threshold"] = st.threshold;
        js["weak"] = ordered_json::array();
        for (const WeakClassifier& wc : st.weak) {
            ordered_json jw;
            if (const HaarWeak* hw = std::get_if<HaarWeak>(&wc)) {
                ordered_json rects = ordered_json::array();
                for (const auto& wr : hw->feature.rects) {
                    ordered_json jr;
                    jr["rect"] = rect_to_json(wr.r);
                    jr["weight"] = wr.weight;
                    rects.push_back(jr);
                }
                jw["rects"] = rects;
                jw["threshold"] = hw->threshold;
                jw["left_vote"] = hw->left_vote;
                jw["right_vote"] = hw->right_vote;
            } else {
                const LbpWeak& lw = std::get<LbpWeak>(wc);
                jw["cell"] = rect_to_json(lw.feature.cell);
                jw["mask"] = mask_to_hex(lw.mask);
                jw["pass_vote"] = lw.pass_vote;
                jw["fail_vote"] = lw.fail_vote;
            }
            js["weak"].push_back(jw);
        }
        j["stages"].push_back(js);
    }
    return j.dump(2) + "\n";
}

CascadeModel cascade_from_json(const std::string& text, const std::string& origin) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // e.byte is the 1-based byte offset of the failure.
        fail(Err::format, origin + ": JSON parse error at byte " + std::to_string(e.byte) + ": " + e.what());
    }

    try {
        const int version = j.at("format_version").get<int>();
        require(version == kFormatVersion, Err::format,
                origin + ": unknown format_version " + std::to_string(version));

        CascadeModel model;
        const std::string kind = j.at("feature_kind").get<std::string>();
        if (kind == "haar") model.kind = FeatureKind::haar;
        else if (kind == "lbp") model.kind = FeatureKind::lbp;
        else fail(Err::validation, origin + ": feature_kind must be haar or lbp, got " + kind);

        const auto& bw = j.at("base_window");
        require(bw.is_array() && bw.size() == 2, Err::validation, origin + ": base_window must be [w,h]");
        model.base_w = bw[0].get<int>();
        model.base_h = bw[1].get<int>();

        size_t si = 0;
        for (const auto& js : j.at("stages")) {
            Stage st;
            st.threshold = js.at("threshold").get<double>();
            size_t wi = 0;
            for (const auto& jw : js.at("weak")) {
                const std::string where =
                    origin + ": stage " + std::to_string(si) + ", weak " + std::to_string(wi);
                if (model.kind == FeatureKind::haar) {
                    HaarWeak hw;
                    hw.feature.base_w = model.base_w;
                    hw.feature.base_h = model.base_h;
                    for (const auto& jr : jw.at("rects"))
                        hw.feature.rects.push_back(
                            {rect_from_json(jr.at("rect"), where), jr.at("weight").get<int>()});
                    hw.threshold = jw.at("threshold").get<double>();
                    hw.left_vote = jw.at("left_vote").get<double>();
                    hw.right_vote = jw.at("right_vote").get<double>();
                    st.weak.push_back(std::move(hw));
                } else {
                    LbpWeak lw;
                    lw.feature.base_w = model.base_w;
                    lw.feature.base_h = model.base_h;
                    lw.feature.cell = rect_from_json(jw.at("cell"), where);
                    lw.mask = mask_from_hex(jw.at("mask").get<std::string>(), where);
                    lw.pass_vote = jw.at("pass_vote").get<double>();
                    lw.fail_vote = jw.at("fail_vote").get<double>();
                    st.weak.push_back(std::move(lw));
                }
                ++wi;
            }
            model.stages.push_back(std::move(st));
            ++si;
        }
        model.validate();
        return model;
    } catch (const nlohmann::json::exception& e) {
        fail(Err::validation, origin + ": " + e.what());
    }
}

void save_cascade(const CascadeModel& model, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), Err::io, "cannot write " + path.string());
    const std::string text = cascade_to_json(model);
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    require(f.good(), Err::io, "short write to " + path.string());
}

CascadeModel load_cascade(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), Err::io, "cannot open " + path.string());
    std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return cascade_from_json(buf, path.string());
}

}  // namespace gazekit
