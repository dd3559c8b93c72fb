/*
 * Arduino core shim for host execution of generated programs.
 *
 * The harness main() loads a trace script (argv[1] or $ARDUINO_SHIM_TRACE),
 * calls setup() once, and then drives loop() exactly like the reference
 * simulator: each iteration first advances the virtual clock one tick and
 * applies the scripted pin events that have come due, then runs loop();
 * iteration continues while the clock is below the trace end time.
 *
 * Trace format (one directive per line, '#' starts a comment):
 *   tick <ms>
 *   pin <n> <high|low>          initial input level
 *   at <ms> pin <n> <high|low>
 *   end <ms>
 */
#include "arduino_shim.h"

#include <stdio.h>
#include <stdlib.h>
#include <string.h>

extern void setup(void);
extern void loop(void);

#define MAX_EVENTS 4096

struct pin_event {
    unsigned long t;
    unsigned seq;
    uint8_t pin;
    uint8_t level;
};

static struct pin_event events[MAX_EVENTS];
static size_t event_count = 0;
static size_t next_event = 0;

static unsigned long long total_ms = 0; /* monotonic; millis() wraps */
static unsigned long tick_ms = 10;
static unsigned long long end_ms = 0;
static int have_end = 0;

static uint8_t pin_mode_of[256];
static uint8_t pin_mode_set[256];
static uint8_t input_level[256];
static uint8_t output_level[256];
static uint8_t output_written[256];

static unsigned long now_ms(void)
{
    return (unsigned long)(total_ms & 0xFFFFFFFFull);
}

void pinMode(uint8_t pin, uint8_t mode)
{
    pin_mode_of[pin] = mode;
    pin_mode_set[pin] = 1;
    if (mode == OUTPUT) {
        output_level[pin] = LOW;
        output_written[pin] = 1;
    }
    if (mode == INPUT || mode == OUTPUT) {
        printf("[t=%lu] pinMode(%u, %s)\n", now_ms(), (unsigned)pin,
               mode == INPUT ? "INPUT" : "OUTPUT");
    } else {
        printf("[t=%lu] pinMode(%u, %u)\n", now_ms(), (unsigned)pin,
               (unsigned)mode);
    }
}

void digitalWrite(uint8_t pin, uint8_t val)
{
    uint8_t level = val ? HIGH : LOW;
    if (!pin_mode_set[pin] || pin_mode_of[pin] != OUTPUT) {
        printf("[t=%lu] WARN digitalWrite on pin %u not set to OUTPUT\n",
               now_ms(), (unsigned)pin);
    }
    if (!output_written[pin] || output_level[pin] != level) {
        printf("[t=%lu] digitalWrite(%u, %s)\n", now_ms(), (unsigned)pin,
               level == HIGH ? "HIGH" : "LOW");
        output_level[pin] = level;
        output_written[pin] = 1;
    }
}

int digitalRead(uint8_t pin)
{
    if (!pin_mode_set[pin] || pin_mode_of[pin] != INPUT) {
        printf("[t=%lu] WARN digitalRead on pin %u not set to INPUT\n",
               now_ms(), (unsigned)pin);
    }
    return input_level[pin];
}

unsigned long millis(void)
{
    return now_ms();
}

void ded_fault(const char *why)
{
    printf("[t=%lu] FAULT %s\n", now_ms(), why);
    fflush(stdout);
    exit(1);
}

int shim_dump_enabled(void)
{
    static int cached = -1;
    if (cached < 0) {
        const char *v = getenv("ARDUINO_SHIM_DUMP");
        cached = (v != NULL && v[0] != '\0' && strcmp(v, "0") != 0) ? 1 : 0;
    }
    return cached;
}

/* -- trace loading ------------------------------------------------------ */

static int parse_level(const char *word, uint8_t *out)
{
    if (strcmp(word, "high") == 0) {
        *out = HIGH;
        return 0;
    }
    if (strcmp(word, "low") == 0) {
        *out = LOW;
        return 0;
    }
    return -1;
}

static int load_trace(const char *path)
{
    FILE *f = fopen(path, "r");
    char line[256];
    int lineno = 0;

    if (f == NULL) {
        fprintf(stderr, "arduino_shim: cannot open trace %s\n", path);
        return -1;
    }
    while (fgets(line, sizeof line, f) != NULL) {
        char word[16];
        unsigned long t;
        unsigned pin;
        uint8_t level;
        char *p = line;
        lineno++;
        while (*p == ' ' || *p == '\t') {
            p++;
        }
        if (*p == '\0' || *p == '\n' || *p == '\r' || *p == '#') {
            continue;
        }
        if (sscanf(p, "tick %lu", &t) == 1) {
            tick_ms = t;
        } else if (sscanf(p, "pin %u %15s", &pin, word) == 2 &&
                   parse_level(word, &level) == 0 && pin < 256) {
            input_level[pin] = level;
        } else if (sscanf(p, "at %lu pin %u %15s", &t, &pin, word) == 3 &&
                   parse_level(word, &level) == 0 && pin < 256) {
            if (event_count == MAX_EVENTS) {
                fprintf(stderr, "arduino_shim: too many trace events\n");
                fclose(f);
                return -1;
            }
            events[event_count].t = t;
            events[event_count].seq = (unsigned)event_count;
            events[event_count].pin = (uint8_t)pin;
            events[event_count].level = level;
            event_count++;
        } else if (sscanf(p, "end %lu", &t) == 1) {
            end_ms = t;
            have_end = 1;
        } else {
            fprintf(stderr, "arduino_shim: bad trace line %d: %s", lineno, p);
            fclose(f);
            return -1;
        }
    }
    fclose(f);
    return 0;
}

static int event_before(const void *a, const void *b)
{
    const struct pin_event *ea = (const struct pin_event *)a;
    const struct pin_event *eb = (const struct pin_event *)b;
    if (ea->t < eb->t) {
        return -1;
    }
    if (ea->t > eb->t) {
        return 1;
    }
    if (ea->seq < eb->seq) {
        return -1;
    }
    return ea->seq > eb->seq ? 1 : 0;
}

static void apply_due_events(void)
{
    while (next_event < event_count && events[next_event].t <= total_ms) {
        input_level[events[next_event].pin] = events[next_event].level;
        next_event++;
    }
}

int main(int argc, char **argv)
{
    const char *path = argc > 1 ? argv[1] : getenv("ARDUINO_SHIM_TRACE");
    if (path == NULL) {
        fprintf(stderr,
                "usage: %s <trace-file>  (or set ARDUINO_SHIM_TRACE)\n",
                argv[0]);
        return 2;
    }
    if (load_trace(path) != 0) {
        return 2;
    }
    if (!have_end) {
        fprintf(stderr, "arduino_shim: trace %s has no 'end' directive\n", path);
        return 2;
    }
    qsort(events, event_count, sizeof events[0], event_before);
    setup();
    do {
        total_ms += tick_ms;
        apply_due_events();
        loop();
    } while (total_ms < end_ms);
    fflush(stdout);
    return 0;
}
