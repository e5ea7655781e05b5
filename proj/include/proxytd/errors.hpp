#pragma once

#include <stdexcept>
#include <string>

namespace proxytd {

// Root of every error thrown by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class shape_error : public error { public: using error::error; };
class insufficient_workers_error : public error { public: using error::error; };
class non_transitive_error : public error { public: using error::error; };
class invalid_fault_error : public error { public: using error::error; };
class invalid_parameter_error : public error { public: using error::error; };
class config_error : public error { public: using error::error; };
class degenerate_weights_error : public error { public: using error::error; };
class exceeds_exact_search_error : public error { public: using error::error; };
class singular_inversion_error : public error { public: using error::error; };
class oracle_unavailable_error : public error { public: using error::error; };
class io_error : public error { public: using error::error; };
class format_version_error : public error { public: using error::error; };

// Malformed input; carries the 1-based line number of the offending row.
class parse_error : public error {
public:
    parse_error(const std::string& what, std::size_t line)
        : error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace proxytd
