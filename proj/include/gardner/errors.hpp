#pragma once
#include <stdexcept>
#include <string>

namespace gardner {

class error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Input outside the mathematical domain of an operation.
class domain_error : public error
{
public:
    using error::error;
};

// Requested point lies at or beyond the critical capacity, where the
// log-volume per dimension is -infinity.
class diverged_error : public error
{
public:
    using error::error;
};

class numerical_failure : public error
{
public:
    using error::error;
};

class convergence_error : public error
{
public:
    convergence_error(const std::string& what, double gap)
        : error(what), _gap(gap)
    {}
    double gap() const noexcept { return _gap; }
private:
    double _gap;
};

// Zero weight in the squeezing cascade (infinite squeezing).
class degenerate_weight_error : public error
{
public:
    using error::error;
};

class stage_failure_error : public error
{
public:
    stage_failure_error(const std::string& what, int stage)
        : error(what), _stage(stage)
    {}
    int stage() const noexcept { return _stage; }
private:
    int _stage;
};

} // namespace gardner
