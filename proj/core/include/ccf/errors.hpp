#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ccf {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class RiccatiError : public Error {
public:
    RiccatiError(const std::string& what, double u, double tau)
        : Error(what), u_(u), tau_(tau) {}
    double u() const noexcept { return u_; }
    double tau() const noexcept { return tau_; }

private:
    double u_;
    double tau_;
};

class PoleError : public Error {
public:
    using Error::Error;
};

class LookupError : public Error {
public:
    using Error::Error;
};

class AdmissibilityError : public Error {
public:
    AdmissibilityError(const std::string& what, std::vector<std::string> violations)
        : Error(what), violations_(std::move(violations)) {}
    const std::vector<std::string>& violations() const noexcept { return violations_; }

private:
    std::vector<std::string> violations_;
};

class DomainError : public Error {
public:
    using Error::Error;
};

enum class BoundSide { Lower, Upper };

class BoundsError : public Error {
public:
    BoundsError(const std::string& what, BoundSide side) : Error(what), side_(side) {}
    BoundSide side() const noexcept { return side_; }

private:
    BoundSide side_;
};

class MissingForwardError : public Error {
public:
    using Error::Error;
};

class ArbitrageError : public Error {
public:
    ArbitrageError(const std::string& what, double m) : Error(what), m_(m) {}
    double m() const noexcept { return m_; }

private:
    double m_;
};

class SurfaceError : public Error {
public:
    using Error::Error;
};

class NearZeroModulusError : public Error {
public:
    using Error::Error;
};

class DegenerateBlockError : public Error {
public:
    using Error::Error;
};

class RankError : public Error {
public:
    RankError(const std::string& what, int rank) : Error(what), rank_(rank) {}
    int rank() const noexcept { return rank_; }

private:
    int rank_;
};

class LikelihoodError : public Error {
public:
    LikelihoodError(const std::string& what, std::size_t date_index)
        : Error(what), date_index_(date_index) {}
    std::size_t date_index() const noexcept { return date_index_; }

private:
    std::size_t date_index_;
};

class ExpansionError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace ccf
