/* fairlab C API. Strings returned through out-parameters are heap allocated and
   must be released with fl_free_string. */
#ifndef FAIRLAB_H
#define FAIRLAB_H

#ifdef __cplusplus
extern "C" {
#endif

#if defined(FAIRLAB_BUILD)
#define FL_API __attribute__((visibility("default")))
#else
#define FL_API
#endif

typedef enum fl_status {
  FL_OK = 0,
  FL_E_INPUT = 1,
  FL_E_UNSUPPORTED = 2,
  FL_E_INSUFFICIENT_DATA = 3,
  FL_E_DEGENERATE = 4,
  FL_E_CALIBRATION_DEGENERATE = 5,
  FL_E_TRAINING_DEGENERATE = 6,
  FL_E_UNCLASSIFIABLE = 7,
  FL_E_VALIDATION = 8,
  FL_E_NOT_FOUND = 9,
  FL_E_IO = 10,
  FL_E_STATE = 11,
  FL_E_INTERNAL = 99
} fl_status;

typedef struct fl_session fl_session;
typedef struct fl_service fl_service;

FL_API const char* fl_version(void);
/* message of the last failure on this thread, "" if none */
FL_API const char* fl_last_error(void);
FL_API const char* fl_status_name(fl_status s);
FL_API void fl_free_string(char* s);

/* scenarios and runs */
FL_API fl_status fl_validate_scenario(const char* scenario_json, char** canonical_out);
FL_API fl_status fl_run_scenario(const char* path, const char* runs_dir, char** run_id_out,
                                 char** summary_json_out);
/* out_dir may be NULL; paths_json_out receives a JSON array of written files */
FL_API fl_status fl_export_run(const char* runs_dir, const char* run_id, const char* format,
                               const char* out_dir, char** paths_json_out);

/* regimes and effects */
FL_API fl_status fl_classify(const char* de_sign, const char* ie_sign, char** regime_out);
/* regime name plus its US and EU law categories as JSON */
FL_API fl_status fl_law_mapping(const char* regime, char** json_out);
/* effects of A on D under a policy, as JSON; scm_json in the scenario "scm" layout */
FL_API fl_status fl_assess_policy(const char* scm_json, const char* policy, const char* data_bias,
                                  const char* reading, char** json_out);
FL_API fl_status fl_d_separated(const char* graph_json, const char* x, const char* y,
                                const char* given_csv, int* separated_out);
FL_API fl_status fl_standard_graph(const char* policy, char** graph_json_out);

/* interactive simulation sessions */
FL_API fl_status fl_session_create(const char* scenario_json, fl_session** out);
FL_API void fl_session_free(fl_session* s);
FL_API fl_status fl_session_step(fl_session* s, int n);
FL_API fl_status fl_session_set_policy(fl_session* s, const char* policy);
FL_API fl_status fl_session_time(const fl_session* s, int* t_out);
FL_API fl_status fl_session_trajectory(const fl_session* s, const char* format, char** out);
FL_API fl_status fl_session_summary(const fl_session* s, char** json_out);

/* HTTP service: bind, then serve on the calling thread until stopped */
FL_API fl_status fl_service_create(const char* state_dir, fl_service** out);
FL_API fl_status fl_service_bind(fl_service* svc, const char* host, int port, int* bound_port_out);
FL_API fl_status fl_service_run(fl_service* svc);
FL_API void fl_service_stop(fl_service* svc);
FL_API void fl_service_free(fl_service* svc);

#ifdef __cplusplus
}
#endif

#endif
