#pragma once

#include <stdexcept>
#include <string>

namespace wsimil {

// Error categories map 1:1 onto CLI exit codes.
enum class errc { config = 2, data = 3, runtime = 4 };

class error : public std::runtime_error {
public:
    error(errc kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    errc kind() const { return kind_; }
    int exit_code() const { return static_cast<int>(kind_); }

private:
    errc kind_;
};

// Bad configuration, invalid hyperparameters, malformed run configs.
class config_error : public error {
public:
    explicit config_error(const std::string& msg) : error(errc::config, msg) {}
};

// Bad input data: missing files, format violations, bounds violations,
// inconsistent containers, degenerate inputs.
class data_error : public error {
public:
    explicit data_error(const std::string& msg) : error(errc::data, msg) {}
};

// Failures during execution that are not traceable to config or input data.
class runtime_fault : public error {
public:
    explicit runtime_fault(const std::string& msg) : error(errc::runtime, msg) {}
};

} // namespace wsimil
