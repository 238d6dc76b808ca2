/* The public header must compile as C. */
#include <cobras/cobras.h>

#include <stdio.h>
#include <string.h>

int main(void) {
  const double values[] = {0.0, 0.1, 5.0, 5.1};
  const int labels[] = {0, 0, 1, 1};
  cobras_dataset* ds = NULL;
  cobras_session* s = NULL;
  cobras_session_options opt;
  cobras_step step;
  int out[4];

  if (cobras_dataset_create(values, 4, 1, labels, &ds) != COBRAS_OK) return 1;
  memset(&opt, 0, sizeof opt);
  opt.budget = 10;
  if (cobras_session_create(ds, &opt, &s) != COBRAS_OK) return 1;
  if (cobras_session_run_labels(s, &step) != COBRAS_OK) return 1;
  if (cobras_session_snapshot(s, out, 4, NULL) != COBRAS_OK) return 1;
  if (out[0] != out[1] || out[2] != out[3] || out[0] == out[2]) return 1;
  printf("ok %s\n", cobras_version());
  cobras_session_free(s);
  cobras_dataset_free(ds);
  return 0;
}
