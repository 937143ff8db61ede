#ifndef KINETIC_BTE_H
#define KINETIC_BTE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes. Nonzero values mirror the CLI exit codes, negated for
// argument errors detected at the boundary.
typedef enum KbteStatus {
  KBTE_STATUS_OK = 0,
  KBTE_STATUS_IO = 1,
  KBTE_STATUS_VALIDATION = 2,
  KBTE_STATUS_NUMERICAL = 3,
  KBTE_STATUS_NULL_POINTER = -1,
  KBTE_STATUS_INVALID_UTF8 = -2,
  KBTE_STATUS_BUFFER_TOO_SMALL = -3,
  KBTE_STATUS_OUT_OF_RANGE = -4,
  KBTE_STATUS_PANIC = -5,
} KbteStatus;

// Subcommands runnable through [`kbte_scenario_run`].
typedef enum KbteCommand {
  KBTE_COMMAND_SIMULATE = 0,
  KBTE_COMMAND_SEMIGROUP = 1,
  KBTE_COMMAND_CYCLES = 2,
  KBTE_COMMAND_KERNEL_CHECK = 3,
  KBTE_COMMAND_ENTROPY = 4,
  KBTE_COMMAND_PICARD = 5,
} KbteCommand;

// Bounded domain `Ω`.
typedef struct KbteDomain KbteDomain;

// External potential `Φ` bound to a domain.
typedef struct KbtePotential KbtePotential;

// Parsed and validated scenario.
typedef struct KbteScenario KbteScenario;

// Time series of diagnostics.
typedef struct KbteSeries KbteSeries;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. Valid until the next
// failing call on the same thread.
const char *kbte_last_error(void);

// Library version as a static NUL-terminated string.
const char *kbte_version(void);

// Ball of the given radius.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum KbteStatus kbte_domain_ball(double radius, struct KbteDomain **out);

// Axis-aligned ellipsoid with semi-axes `radii[0..3]`.
//
// # Safety
// `radii` must point to three doubles; `out` to storage for one handle.
enum KbteStatus kbte_domain_ellipsoid(const double *radii, struct KbteDomain **out);

// # Safety
// `d` must be null or a handle from a `kbte_domain_*` constructor, freed once.
void kbte_domain_free(struct KbteDomain *d);

// Level-set value `ξ(x)`; negative inside.
//
// # Safety
// `d` must be a live domain handle, `x` three doubles, `out` one double.
enum KbteStatus kbte_domain_level(const struct KbteDomain *d, const double *x, double *out);

// `Φ ≡ 0`.
//
// # Safety
// `out` must point to storage for one handle.
enum KbteStatus kbte_potential_zero(struct KbtePotential **out);

// `Φ = κ|x|²/2` on the domain.
//
// # Safety
// `d` must be a live domain handle; `out` storage for one handle.
enum KbteStatus kbte_potential_harmonic(double kappa,
                                        const struct KbteDomain *d,
                                        struct KbtePotential **out);

// # Safety
// `p` must be null or a handle from a `kbte_potential_*` constructor, freed once.
void kbte_potential_free(struct KbtePotential *p);

// `Φ(x)`.
//
// # Safety
// `p` must be a live potential handle, `x` three doubles, `out` one double.
enum KbteStatus kbte_potential_phi(const struct KbtePotential *p, const double *x, double *out);

// Backward exit `(t_b, x_b, v_b)` of the characteristic through `(x, v)`.
//
// # Safety
// Handles must be live; `x`, `v`, `x_b`, `v_b` three doubles each; `t_b` one.
enum KbteStatus kbte_backward_exit(const struct KbteDomain *d,
                                   const struct KbtePotential *p,
                                   const double *x,
                                   const double *v,
                                   double *t_b,
                                   double *x_b,
                                   double *v_b);

// `∫ v₁^{e₀} v₂^{e₁} v₃^{e₂} |v|^{2k} e^{−|v|²/2} dv`.
//
// # Safety
// `exponents` must point to three unsigned integers.
enum KbteStatus kbte_gaussian_moment(const uint32_t *exponents, uint32_t k, double *out);

// `β_c`.
double kbte_beta_c(void);

// The hydrodynamic constant `A`.
double kbte_constant_a(void);

// Parses a scenario from TOML text.
//
// # Safety
// `text` must be a NUL-terminated string; `out` storage for one handle.
enum KbteStatus kbte_scenario_parse(const char *text, struct KbteScenario **out);

// Loads a scenario file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` storage for one handle.
enum KbteStatus kbte_scenario_load(const char *path, struct KbteScenario **out);

// # Safety
// `s` must be null or a scenario handle, freed once.
void kbte_scenario_free(struct KbteScenario *s);

// Overrides the seed.
//
// # Safety
// `s` must be a live scenario handle.
enum KbteStatus kbte_scenario_set_seed(struct KbteScenario *s, uint64_t seed);

// Configuration hash written into every output file.
//
// # Safety
// `s` must be a live scenario handle; `buf` `len` writable bytes or null;
// `needed` null or one `size_t`.
enum KbteStatus kbte_scenario_hash(const struct KbteScenario *s,
                                   char *buf,
                                   size_t len,
                                   size_t *needed);

// Runs a subcommand, writing its files into `out_dir`.
//
// # Safety
// `s` must be a live scenario handle; `out_dir` a NUL-terminated string.
enum KbteStatus kbte_scenario_run(const struct KbteScenario *s,
                                  enum KbteCommand command,
                                  const char *out_dir);

// Runs the positivity-preserving scheme and returns its diagnostics.
//
// # Safety
// `s` must be a live scenario handle; `out` storage for one handle.
enum KbteStatus kbte_simulate(const struct KbteScenario *s, struct KbteSeries **out);

// # Safety
// `s` must be null or a series handle, freed once.
void kbte_series_free(struct KbteSeries *s);

// Number of recorded times.
//
// # Safety
// `s` must be a live series handle.
size_t kbte_series_len(const struct KbteSeries *s);

// Number of channels, excluding time.
//
// # Safety
// `s` must be a live series handle.
size_t kbte_series_channel_count(const struct KbteSeries *s);

// Name of channel `index`.
//
// # Safety
// `s` must be a live series handle; `buf` `len` writable bytes or null;
// `needed` null or one `size_t`.
enum KbteStatus kbte_series_channel_name(const struct KbteSeries *s,
                                         size_t index,
                                         char *buf,
                                         size_t len,
                                         size_t *needed);

// Copies the recorded times into `out[0..len]`.
//
// # Safety
// `s` must be a live series handle; `out` `len` writable doubles.
enum KbteStatus kbte_series_times(const struct KbteSeries *s, double *out, size_t len);

// Copies channel `name` into `out[0..len]`.
//
// # Safety
// `s` must be a live series handle; `name` a NUL-terminated string; `out`
// `len` writable doubles.
enum KbteStatus kbte_series_channel(const struct KbteSeries *s,
                                    const char *name,
                                    double *out,
                                    size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KINETIC_BTE_H */
