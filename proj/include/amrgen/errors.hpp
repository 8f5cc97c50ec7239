#pragma once

#include <stdexcept>
#include <string>

namespace amrgen {

// Malformed or inconsistent input data. The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  DataError(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// A search (oracle or beam) found no admissible result. Exit code 3.
class SearchFailure : public std::runtime_error {
 public:
  SearchFailure(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define AMRGEN_DATA_ERROR(Name)                                       \
  class Name : public DataError {                                     \
   public:                                                            \
    explicit Name(const std::string& what) : DataError(#Name, what) {} \
  }

#define AMRGEN_SEARCH_FAILURE(Name)                                       \
  class Name : public SearchFailure {                                     \
   public:                                                                \
    explicit Name(const std::string& what) : SearchFailure(#Name, what) {} \
  }

AMRGEN_DATA_ERROR(MalformedPenman);
AMRGEN_DATA_ERROR(BadSpan);
AMRGEN_DATA_ERROR(UnknownConcept);
AMRGEN_DATA_ERROR(EmptySentence);
AMRGEN_DATA_ERROR(NoAlignedConcept);
AMRGEN_DATA_ERROR(DimensionMismatch);
AMRGEN_DATA_ERROR(BadPermutation);
AMRGEN_DATA_ERROR(IllegalAction);
AMRGEN_DATA_ERROR(IllegalTrace);
AMRGEN_DATA_ERROR(ShapeMismatch);
AMRGEN_DATA_ERROR(IndexOutOfRange);
AMRGEN_DATA_ERROR(EmptyBuffer);
AMRGEN_DATA_ERROR(EmptyCorpus);
AMRGEN_DATA_ERROR(Overflow);
AMRGEN_DATA_ERROR(BadCheckpoint);

AMRGEN_SEARCH_FAILURE(TreewidthExceeded);
AMRGEN_SEARCH_FAILURE(NoCompleteHypothesis);
AMRGEN_SEARCH_FAILURE(SearchBudgetExceeded);

#undef AMRGEN_DATA_ERROR
#undef AMRGEN_SEARCH_FAILURE

}  // namespace amrgen
