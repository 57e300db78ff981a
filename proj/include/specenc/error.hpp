#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace specenc
{
    // Precondition on a numeric argument or shape violated.
    class DomainError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    class IndexError : public std::out_of_range
    {
    public:
        using std::out_of_range::out_of_range;
    };

    // The quantity is mathematically undefined for the given input (constant data, empty clouds, ...).
    class DegenerateInput : public std::domain_error
    {
    public:
        using std::domain_error::domain_error;
    };

    class ParseError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Carries every missing path, not just the first one encountered.
    class MissingFileError : public std::runtime_error
    {
    public:
        explicit MissingFileError(std::vector<std::string> files)
            : std::runtime_error(compose("missing file", files)), files_(std::move(files)) {}

        const std::vector<std::string> &files() const noexcept { return files_; }

    protected:
        static std::string compose(const std::string &what, const std::vector<std::string> &items)
        {
            std::string msg = what + (items.size() == 1 ? ": " : "s: ");
            for (std::size_t i = 0; i < items.size(); ++i)
            {
                if (i)
                    msg += ", ";
                msg += items[i];
            }
            return msg;
        }

    private:
        std::vector<std::string> files_;
    };

    class MissingPredictionError : public std::runtime_error
    {
    public:
        explicit MissingPredictionError(std::vector<std::string> frame_ids)
            : std::runtime_error(compose(frame_ids)), frame_ids_(std::move(frame_ids)) {}

        const std::vector<std::string> &frame_ids() const noexcept { return frame_ids_; }

    private:
        static std::string compose(const std::vector<std::string> &ids)
        {
            std::string msg = "missing predictions for frames:";
            for (const auto &id : ids)
                msg += " " + id;
            return msg;
        }

        std::vector<std::string> frame_ids_;
    };

    class DivergenceError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    class UsageError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };
}
