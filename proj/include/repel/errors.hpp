#pragma once

#include <stdexcept>
#include <string>

namespace repel {

/// Precondition or argument violation (bad ids, size mismatch, out-of-range parameters).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A placer produced boxes that break containment or sibling disjointness.
class GeometryError : public DomainError {
public:
    GeometryError(const std::string& what, int first, int second)
        : DomainError(what), first_node(first), second_node(second) {}

    int first_node;
    int second_node;
};

/// Factorization or iterative solve failed.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input file could not be parsed or violates its schema.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line_no = 0, std::size_t column_no = 0)
        : std::runtime_error(what), line(line_no), column(column_no) {}

    std::size_t line;
    std::size_t column;
};

}  // namespace repel
