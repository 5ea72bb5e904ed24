#pragma once

#include "aidsfit/aids.hpp"
#include "aidsfit/synth.hpp"

#include <memory>

namespace fixtures {

inline aidsfit::SharePanel synthetic(std::size_t n, std::size_t weeks, double noise,
                                     std::uint64_t seed) {
    auto cfg = aidsfit::default_config(n, weeks, noise, seed);
    return aidsfit::SharePanel(std::make_shared<const aidsfit::MarketPanel>(aidsfit::generate(cfg)));
}

inline aidsfit::SharePanel shares_of(aidsfit::MarketPanel panel) {
    return aidsfit::SharePanel(std::make_shared<const aidsfit::MarketPanel>(std::move(panel)));
}

}  // namespace fixtures
