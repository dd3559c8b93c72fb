/*
 * Host-side stand-in for the Arduino core, for running generated programs
 * on a desktop.  Pin input levels are scripted by a trace file; pinMode
 * and digitalWrite report to stdout in the same format the reference
 * simulator uses, so outputs can be diffed directly.
 */
#ifndef ARDUINO_SHIM_H
#define ARDUINO_SHIM_H

#include <stdint.h>

#define HIGH 1
#define LOW 0
#define INPUT 0
#define OUTPUT 1
#define INPUT_PULLUP 2

void pinMode(uint8_t pin, uint8_t mode);
void digitalWrite(uint8_t pin, uint8_t val);
int digitalRead(uint8_t pin);
unsigned long millis(void);

/* Hook called by generated code on a buffer overflow: prints a FAULT line
 * and exits. */
void ded_fault(const char *why);

/* True when ARDUINO_SHIM_DUMP is set; generated host builds gate their
 * per-step fact dumps on this. */
int shim_dump_enabled(void);

#endif /* ARDUINO_SHIM_H */
