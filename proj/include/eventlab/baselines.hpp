#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "eventlab/descriptors.hpp"
#include "eventlab/errors.hpp"
#include "eventlab/frames.hpp"

namespace eventlab {

struct BaselineParams {
    std::uint32_t downsample = 4;
    std::size_t sparse_pixels = 512;
    std::uint64_t seed = 0;
};

// A describer turns one frame stack into descriptors; the factory sees the
// reference stack first so baselines can derive state from it (the sparse
// baseline selects its pixels there and reuses them verbatim for the query).
using Describer = std::function<std::vector<Descriptor>(const FrameStack&)>;
using BaselineFactory = std::function<Describer(const FrameStack& reference,
                                                const BaselineParams&)>;

class BaselineRegistry {
public:
    void register_baseline(const std::string& name, BaselineFactory factory) {
        require(!factories_.count(name), "baseline '", name, "' is already registered");
        factories_[name] = std::move(factory);
    }

    bool contains(const std::string& name) const { return factories_.count(name) > 0; }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& [name, _] : factories_) out.push_back(name);
        return out;
    }

    Describer make(const std::string& name, const FrameStack& reference,
                   const BaselineParams& params) const {
        auto it = factories_.find(name);
        if (it == factories_.end()) {
            std::string known;
            for (const auto& n : names()) known += (known.empty() ? "" : ", ") + n;
            fail("unknown baseline '", name, "' (registered: ", known, ")");
        }
        return it->second(reference, params);
    }

    // Native descriptor baselines plus the external methods the batch schema
    // recognizes. Externals are registered so configurations naming them
    // parse and expand; their runs fail with an explanatory message and are
    // recorded as failure rows.
    static BaselineRegistry with_builtins() {
        BaselineRegistry reg;
        reg.register_baseline("dense_sad",
                              [](const FrameStack&, const BaselineParams& params) -> Describer {
                                  const std::uint32_t ds = params.downsample;
                                  return [ds](const FrameStack& st) {
                                      return describe_dense(st, ds);
                                  };
                              });
        reg.register_baseline(
            "sparse_event",
            [](const FrameStack& reference, const BaselineParams& params) -> Describer {
                const std::size_t k =
                    std::min<std::size_t>(params.sparse_pixels, reference.pixels());
                auto pixels = select_active_pixels(reference, k);
                return [pixels = std::move(pixels)](const FrameStack& st) {
                    return describe_sparse(st, pixels);
                };
            });
        for (const char* external : {"lens", "eventvlad", "ensemble_event", "vprmethods"}) {
            std::string name = external;
            reg.register_baseline(name,
                                  [name](const FrameStack&, const BaselineParams&) -> Describer {
                                      fail("baseline '", name,
                                           "' is an external method whose models are not "
                                           "bundled; provide its frames via "
                                           "reconstruction-import and a native metric, or use "
                                           "dense_sad / sparse_event");
                                  });
        }
        return reg;
    }

private:
    std::map<std::string, BaselineFactory> factories_;
};

}  // namespace eventlab
