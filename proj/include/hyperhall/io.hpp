#pragma once

// JSON export of balls and kernels. Needs nlohmann/json on the include path.

#include <json.hpp>

#include "fuchsian.hpp"
#include "twisted_algebra.hpp"

namespace hyperhall {

inline nlohmann::json element_to_json(const GroupElement& e) {
    return {{"word", e.word},
            {"length", e.length()},
            {"matrix", {e.matrix.a, e.matrix.b, e.matrix.c, e.matrix.d}},
            {"abel", e.abel}};
}

/// {genus, radius, size, shell_offset, elements: [{id, word, length, matrix, abel}]}
inline nlohmann::json ball_to_json(const CayleyBall& ball) {
    nlohmann::json els = nlohmann::json::array();
    for (size_t i = 0; i < ball.size(); ++i) {
        auto j = element_to_json(ball[static_cast<int>(i)]);
        j["id"] = i;
        els.push_back(std::move(j));
    }
    return {{"genus", ball.group()->genus},
            {"radius", ball.radius},
            {"size", ball.size()},
            {"shell_offset", ball.shell_offset},
            {"elements", std::move(els)}};
}

/// [{id, word, re, im}] over the support, in id order.
inline nlohmann::json kernel_to_json(const TwistedKernel& k) {
    nlohmann::json out = nlohmann::json::array();
    const auto& tab = k.context()->table();
    for (auto [id, v] : k.entries())
        out.push_back({{"id", id}, {"word", tab[id].word}, {"re", v.real()}, {"im", v.imag()}});
    return out;
}

}  // namespace hyperhall
