"""Built-in modules available to every session.

These are ordinary module texts; NAT and QID additionally get literal
constants (decimal numerals, quoted identifiers) and evaluation hooks
wired in by the engine via ``special`` attributes.
"""

PRELUDE_SOURCE = """
fmod TRUTH-VALUE is
  sort Bool .
  op true : -> Bool [ctor] .
  op false : -> Bool [ctor] .
endfm

fmod BOOL is
  protecting TRUTH-VALUE .
  op not_ : Bool -> Bool [prec 53] .
  op _and_ : Bool Bool -> Bool [assoc comm prec 55] .
  op _or_ : Bool Bool -> Bool [assoc comm prec 59] .
  op _xor_ : Bool Bool -> Bool [assoc comm prec 57] .
  vars A B : Bool .
  eq not true = false .
  eq not false = true .
  eq true and A = A .
  eq false and A = false .
  eq A and A = A .
  eq true or A = true .
  eq false or A = A .
  eq A or A = A .
  eq true xor A = not A .
  eq false xor A = A .
  eq A xor A = false .
endfm

fmod NAT is
  sorts Zero NzNat Nat .
  subsorts Zero NzNat < Nat .
  op 0 : -> Zero [ctor] .
  op s_ : Nat -> NzNat [ctor prec 15 special (nat.s)] .
  op _+_ : Nat Nat -> Nat [assoc comm prec 33 special (nat.plus)] .
  op _*_ : Nat Nat -> Nat [assoc comm prec 31 special (nat.times)] .
  op _<_ : Nat Nat -> Bool [prec 37 special (nat.lt)] .
  op _<=_ : Nat Nat -> Bool [prec 37 special (nat.le)] .
  op _>_ : Nat Nat -> Bool [prec 37 special (nat.gt)] .
  op _>=_ : Nat Nat -> Bool [prec 37 special (nat.ge)] .
  op max : Nat Nat -> Nat [comm special (nat.max)] .
  op min : Nat Nat -> Nat [comm special (nat.min)] .
  op sd : Nat Nat -> Nat [comm special (nat.sd)] .
endfm

fmod QID is
  sort Qid .
endfm

fmod NAT-LIST is
  protecting NAT .
  sort NatList .
  subsort Nat < NatList .
  op nil : -> NatList [ctor] .
  op __ : NatList NatList -> NatList [ctor assoc id: nil prec 25] .
endfm

fmod QID-LIST is
  protecting QID .
  sort QidList .
  subsort Qid < QidList .
  op nil : -> QidList [ctor] .
  op __ : QidList QidList -> QidList [ctor assoc id: nil prec 25] .
endfm

mod CONFIGURATION is
  sorts Attribute AttributeSet .
  subsort Attribute < AttributeSet .
  op none : -> AttributeSet [ctor] .
  op _,_ : AttributeSet AttributeSet -> AttributeSet
    [ctor assoc comm id: none] .
  sorts Oid Cid Object Msg Portal Configuration .
  subsort Object Msg Portal < Configuration .
  op <_:_|_> : Oid Cid AttributeSet -> Object [ctor object] .
  op none : -> Configuration [ctor] .
  op __ : Configuration Configuration -> Configuration
    [ctor config assoc comm id: none] .
  op <> : -> Portal [ctor] .
endm
"""


def load_prelude(db):
    """Register the built-in raw modules in a module database."""
    from .parser import parse_units
    for unit in parse_units(PRELUDE_SOURCE):
        if not isinstance(unit, list):
            db.insert(unit)
    return db
