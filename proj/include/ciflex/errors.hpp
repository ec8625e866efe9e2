#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace ciflex {

// Base type for all engine errors. Subtypes exist so callers can
// distinguish contract violations from data problems.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// An operation was called on a cache that does not satisfy its
// precondition (e.g. checkpoint on a cache not ending in a turn query).
class PreconditionError : public Error {
public:
    using Error::Error;
};

// A segment carried the wrong role for the operation.
class RoleError : public Error {
public:
    using Error::Error;
};

// A side cache was handed to an operation together with a checkpoint it
// was not derived from.
class LineageError : public Error {
public:
    using Error::Error;
};

// Failure inside a model backend, tagged with the stage that invoked it.
class BackendError : public Error {
public:
    BackendError(const std::string& stage, const std::string& what)
        : Error(stage + ": " + what), stage_(stage) {}
    const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

// The counting backend was asked to decode a stage with no scripted entry.
class ScriptingError : public Error {
public:
    ScriptingError(int turn, const std::string& stage)
        : Error("no scripted output for turn " + std::to_string(turn) +
                " stage " + stage),
          turn_(turn), stage_(stage) {}
    int turn() const { return turn_; }
    const std::string& stage() const { return stage_; }

private:
    int turn_;
    std::string stage_;
};

// A classifier produced text that does not parse as a verdict or option.
class ClassificationFormatError : public Error {
public:
    using Error::Error;
};

// A template was rendered with an unbound placeholder, or an unknown
// template name was requested.
class TemplateError : public Error {
public:
    using Error::Error;
};

// A conversation script or synthetic profile failed validation. Carries
// every violation, each as "field path: rule".
class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<std::string> issues)
        : Error(join(issues)), issues_(std::move(issues)) {}
    const std::vector<std::string>& issues() const { return issues_; }

private:
    static std::string join(const std::vector<std::string>& issues) {
        std::string out = "validation failed:";
        for (const auto& s : issues) {
            out += "\n  " + s;
        }
        return out;
    }
    std::vector<std::string> issues_;
};

// An infeasible synthetic profile (e.g. summary turns without casual turns).
class ProfileError : public Error {
public:
    using Error::Error;
};

}  // namespace ciflex
