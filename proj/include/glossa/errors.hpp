#pragma once

#include <stdexcept>
#include <string>

namespace glossa {

/// Base class of every error raised by the library. `kind()` is the stable
/// machine-readable name used in CLI messages and HTTP error bodies.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define GLOSSA_DEFINE_ERROR(Name)                                      \
  class Name : public Error {                                          \
   public:                                                             \
    explicit Name(const std::string& message) : Error(#Name, message) {} \
  };

GLOSSA_DEFINE_ERROR(ParseError)
GLOSSA_DEFINE_ERROR(UnknownAtomicTag)
GLOSSA_DEFINE_ERROR(EmptyTag)
GLOSSA_DEFINE_ERROR(UnmappedTag)
GLOSSA_DEFINE_ERROR(OutOfRange)
GLOSSA_DEFINE_ERROR(NoTrainingData)
GLOSSA_DEFINE_ERROR(DegenerateTagset)
GLOSSA_DEFINE_ERROR(InsufficientData)
GLOSSA_DEFINE_ERROR(EmptySentence)
GLOSSA_DEFINE_ERROR(EmptyCorpus)
GLOSSA_DEFINE_ERROR(MissingItalianTags)
GLOSSA_DEFINE_ERROR(NoSeeds)
GLOSSA_DEFINE_ERROR(EmptyDictionary)
GLOSSA_DEFINE_ERROR(NoAnnotatedData)
GLOSSA_DEFINE_ERROR(TooFewNarratives)
GLOSSA_DEFINE_ERROR(QueueEmpty)
GLOSSA_DEFINE_ERROR(ModelNotReady)
GLOSSA_DEFINE_ERROR(LengthMismatch)
GLOSSA_DEFINE_ERROR(UnknownTag)
GLOSSA_DEFINE_ERROR(StaleTask)
GLOSSA_DEFINE_ERROR(TaskNotFound)
GLOSSA_DEFINE_ERROR(NothingToRetrain)
GLOSSA_DEFINE_ERROR(RetrainFailed)
GLOSSA_DEFINE_ERROR(AnnotatorUnavailable)
GLOSSA_DEFINE_ERROR(InvalidConfig)

#undef GLOSSA_DEFINE_ERROR

}  // namespace glossa
