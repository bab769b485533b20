// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <iostream>
#include <mutex>
#include <string>
#include <string_view>
#include <utility>

namespace rigl::log {

using Sink = std::function<void(std::string_view)>;

namespace detail {
inline std::mutex& mutex() {
    static std::mutex m;
    return m;
}
inline Sink& sink() {
    static Sink s = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
    return s;
}
}  // namespace detail

inline void warn(std::string_view msg) {
    std::lock_guard<std::mutex> lock(detail::mutex());
    detail::sink()(msg);
}

/// Redirects warnings for the lifetime of the object.
class ScopedSink {
   public:
    explicit ScopedSink(Sink s) {
        std::lock_guard<std::mutex> lock(detail::mutex());
        previous_ = std::exchange(detail::sink(), std::move(s));
    }
    ~ScopedSink() {
        std::lock_guard<std::mutex> lock(detail::mutex());
        detail::sink() = std::move(previous_);
    }
    ScopedSink(const ScopedSink&) = delete;
    ScopedSink& operator=(const ScopedSink&) = delete;

   private:
    Sink previous_;
};

}  // namespace rigl::log
