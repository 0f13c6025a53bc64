#pragma once

#include <mutex>
#include <string>
#include <vector>

namespace ccf {

struct Diagnostic {
    std::string date;
    double tenor_days = 0.0;
    std::string code;
    std::string detail;
};

// Thread-safe append-only log of per-slice events.
class DiagnosticLog {
public:
    void add(Diagnostic d) {
        std::lock_guard lock(mutex_);
        entries_.push_back(std::move(d));
    }
    std::vector<Diagnostic> entries() const {
        std::lock_guard lock(mutex_);
        return entries_;
    }

private:
    mutable std::mutex mutex_;
    std::vector<Diagnostic> entries_;
};

}  // namespace ccf
