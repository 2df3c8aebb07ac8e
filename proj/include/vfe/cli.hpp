#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "vfe/numeric.hpp"

namespace vfe::cli
{
/// Exit codes of the command-line front-end.
enum ExitCode : int
{
    exit_ok = 0,
    exit_failure = 1,
    exit_validation = 2,
    exit_nonconvergence = 3,
};

struct KeySpec
{
    std::string key;
    std::string default_value;
    std::string help;
};

/// Every accepted configuration key with its default.
const std::vector<KeySpec>& key_registry();

/// Flat key=value configuration. Unknown keys raise ValidationError listing the accepted ones.
class Config
{
public:
    Config();

    void set(const std::string& key, const std::string& value);
    /// Parses a `key = value` line; blank lines and `#` comments are ignored.
    void set_assignment(const std::string& assignment);
    void load_file(const std::string& path);

    const std::string& raw(const std::string& key) const;
    bool is_auto(const std::string& key) const { return raw(key) == "auto"; }
    Scalar real(const std::string& key) const;
    long long integer(const std::string& key) const;
    std::uint64_t unsigned_integer(const std::string& key) const;
    /// Comma-separated reals; an empty value is an empty list.
    std::vector<Scalar> reals(const std::string& key) const;
    /// Semicolon-separated `x,y` pairs.
    std::vector<Vec2> points(const std::string& key) const;

    /// All keys in registry order as `key=value` lines.
    std::string resolved() const;

private:
    std::map<std::string, std::string> values_;
};

const std::vector<std::string>& subcommands();

/// Runs one subcommand, writing CSV artifacts under output.dir and a summary to `out`.
/// Errors propagate as vfe exceptions.
void run_subcommand(const std::string& name, const Config& config, std::ostream& out);

/// Full front-end: argument parsing, config assembly, dispatch and exit-code mapping.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);
} // namespace vfe::cli
