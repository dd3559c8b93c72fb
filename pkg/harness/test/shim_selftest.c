/*
 * Exercises the shim directly with a hand-written sketch: pin modes,
 * write deduplication, scripted reads, millis progression, and the
 * misuse warning.  Run against test/selftest.trace and diff the output
 * with test/expected_output.txt.
 */
#include "arduino_shim.h"

static int latched = 0;

void setup(void)
{
    pinMode(5, OUTPUT);
    pinMode(2, INPUT);
    pinMode(6, OUTPUT);
    digitalWrite(9, HIGH); /* warns: pin 9 was never configured */
}

void loop(void)
{
    if (millis() >= 30 && !latched) {
        digitalWrite(5, HIGH);
        digitalWrite(5, HIGH); /* unchanged level: must not print */
        latched = 1;
    }
    if (millis() == 40) {
        digitalWrite(6, HIGH);
    }
    if (digitalRead(2) == HIGH) {
        digitalWrite(5, LOW);
    }
}
