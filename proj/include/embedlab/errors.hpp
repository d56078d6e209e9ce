#pragma once

#include <stdexcept>
#include <string>

namespace embedlab {

// Base class for all domain errors. The CLI maps these to exit code 1;
// anything else escaping is a bug.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

#define EMBEDLAB_DEFINE_ERROR(NAME)                                    \
    class NAME : public Error {                                        \
    public:                                                            \
        explicit NAME(const std::string& msg) : Error(#NAME ": " + msg) {} \
    }

// store
EMBEDLAB_DEFINE_ERROR(FormatError);
EMBEDLAB_DEFINE_ERROR(UnsupportedDtype);
EMBEDLAB_DEFINE_ERROR(DegenerateRow);
EMBEDLAB_DEFINE_ERROR(ManifestError);
EMBEDLAB_DEFINE_ERROR(VocabError);
EMBEDLAB_DEFINE_ERROR(TemplateError);
EMBEDLAB_DEFINE_ERROR(FileNotFound);

// shape / range checks shared across modules
EMBEDLAB_DEFINE_ERROR(ShapeError);
EMBEDLAB_DEFINE_ERROR(RangeError);
EMBEDLAB_DEFINE_ERROR(DataError);

// zeroshot
EMBEDLAB_DEFINE_ERROR(EmptyClass);

// probe / concepts / metrics
EMBEDLAB_DEFINE_ERROR(DegenerateLabels);

// sae
EMBEDLAB_DEFINE_ERROR(TrainingDiverged);

// concepts
EMBEDLAB_DEFINE_ERROR(CapacityError);

// metrics
EMBEDLAB_DEFINE_ERROR(BootstrapDegenerate);
EMBEDLAB_DEFINE_ERROR(DegenerateDifferences);

// survival
EMBEDLAB_DEFINE_ERROR(DegenerateTest);
EMBEDLAB_DEFINE_ERROR(DegenerateCovariate);
EMBEDLAB_DEFINE_ERROR(DegenerateHorizon);

#undef EMBEDLAB_DEFINE_ERROR

}  // namespace embedlab
